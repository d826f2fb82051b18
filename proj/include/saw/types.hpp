#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace saw {

/// 3-D voxel grid of attenuation values (1/mm).
/// Flat storage is x-fastest, then y, then z.
struct Volume {
    std::array<int, 3> dims{0, 0, 0};            // nx, ny, nz
    std::array<double, 3> voxel_size{1.0, 1.0, 1.0};  // dx, dy, dz in mm
    std::vector<double> values;

    Volume() = default;
    Volume(std::array<int, 3> d, std::array<double, 3> vs)
        : dims(d), voxel_size(vs),
          values(static_cast<std::size_t>(d[0]) * d[1] * d[2], 0.0) {}

    std::size_t size() const { return values.size(); }

    std::size_t index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(iz) * dims[1] + iy) * dims[0] + ix;
    }
    double& at(int ix, int iy, int iz) { return values[index(ix, iy, iz)]; }
    double at(int ix, int iy, int iz) const { return values[index(ix, iy, iz)]; }

    bool same_shape(const Volume& o) const {
        return dims == o.dims;
    }
};

/// Per-view 2-D detector measurements (line integrals, attenuation*mm).
/// Flat storage is col-fastest, then row, then view.
struct Sinogram {
    int num_views = 0;
    int detector_rows = 0;
    int detector_cols = 0;
    std::vector<double> values;

    Sinogram() = default;
    Sinogram(int views, int rows, int cols)
        : num_views(views), detector_rows(rows), detector_cols(cols),
          values(static_cast<std::size_t>(views) * rows * cols, 0.0) {}

    std::size_t size() const { return values.size(); }

    std::size_t index(int view, int row, int col) const {
        return (static_cast<std::size_t>(view) * detector_rows + row) * detector_cols + col;
    }
    double& at(int view, int row, int col) { return values[index(view, row, col)]; }
    double at(int view, int row, int col) const { return values[index(view, row, col)]; }

    bool same_shape(const Sinogram& o) const {
        return num_views == o.num_views && detector_rows == o.detector_rows &&
               detector_cols == o.detector_cols;
    }
};

}  // namespace saw
