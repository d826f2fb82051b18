#include "saw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "saw/threading.hpp"

namespace saw {

bool ViewSubset::contains(int view) const {
    return std::find(indices.begin(), indices.end(), view) != indices.end();
}

Geometry make_geometry(const GeometryConfig& c) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("geometry: " + msg); };

    if (!(c.source_to_iso_mm > 0.0)) fail("source_to_iso_mm must be > 0");
    if (!(c.source_to_detector_mm > c.source_to_iso_mm))
        fail("source_to_detector_mm must exceed source_to_iso_mm");
    if (c.detector_cols < 1) fail("detector_cols must be >= 1");
    if (c.detector_rows < 1) fail("detector_rows must be >= 1");
    if (!(c.detector_col_spacing_mm > 0.0)) fail("detector_col_spacing_mm must be > 0");
    if (!(c.detector_row_spacing_mm > 0.0)) fail("detector_row_spacing_mm must be > 0");
    if (c.num_views < 2) fail("num_views must be >= 2");
    for (int a = 0; a < 3; ++a) {
        if (c.volume_dims[a] < 1) fail("volume_dims must be >= 1 on every axis");
        if (!(c.voxel_size_mm[a] > 0.0)) fail("voxel_size_mm must be > 0 on every axis");
    }

    Geometry g;
    g.source_to_iso = c.source_to_iso_mm;
    g.source_to_detector = c.source_to_detector_mm;
    g.detector_cols = c.detector_cols;
    g.detector_rows = c.detector_rows;
    g.detector_col_spacing = c.detector_col_spacing_mm;
    g.detector_row_spacing = c.detector_row_spacing_mm;
    g.num_views = c.num_views;
    g.volume_dims = c.volume_dims;
    g.voxel_size = c.voxel_size_mm;

    g.view_angles.resize(c.num_views);
    const double step = 2.0 * M_PI / c.num_views;
    for (int v = 0; v < c.num_views; ++v)
        g.view_angles[v] = c.first_angle_rad + v * step;
    return g;
}

ViewSubset full_scan_views(const Geometry& g) {
    ViewSubset s;
    s.kind = ViewSubset::Kind::full;
    s.indices.resize(g.num_views);
    for (int v = 0; v < g.num_views; ++v) s.indices[v] = v;
    return s;
}

ViewSubset half_scan_views(const Geometry& g, int start_index) {
    if (start_index < 0 || start_index >= g.num_views)
        throw std::invalid_argument("half_scan_views: start_index out of range");
    const double span_needed = M_PI + g.fan_angle();
    const double step = g.view_spacing();
    const int count = static_cast<int>(std::ceil(span_needed / step - 1e-12)) + 1;
    if (count > g.num_views)
        throw std::invalid_argument(
            "half_scan_views: required span " + std::to_string(span_needed) +
            " rad does not fit in a full rotation of whole views");

    ViewSubset s;
    s.kind = ViewSubset::Kind::half;
    s.indices.resize(count);
    for (int i = 0; i < count; ++i) s.indices[i] = (start_index + i) % g.num_views;
    return s;
}

bool ray_hits_detector(const Geometry& g, double angle, const std::array<double, 3>& p) {
    const double ce = std::cos(angle), se = std::sin(angle);
    // Distance from the source plane to the voxel along the central direction.
    const double depth = g.source_to_iso - (p[0] * ce + p[1] * se);
    if (!(depth > 0.0)) return false;
    const double scale = g.source_to_detector / depth;
    const double u = (-p[0] * se + p[1] * ce) * scale;
    const double v = p[2] * scale;
    return std::abs(u) <= g.detector_half_width() && std::abs(v) <= g.detector_half_height();
}

namespace {

// 1-D squared Euclidean distance transform (lower envelope of parabolas)
// on an equispaced grid with spacing h. f holds input squared distances,
// d the output; both length n.
void edt_1d(const double* f, double* d, int n, double h, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            s = ((f[q] + q * h * q * h) - (f[v[k]] + v[k] * h * v[k] * h)) /
                (2.0 * h * (q - v[k]));
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q * h) ++k;
        const double dq = (q - v[k]) * h;
        d[q] = dq * dq + f[v[k]];
    }
}

// Separable exact EDT: squared distance (mm^2) to the nearest seed voxel
// (seed = value 0 in `inside`). Anisotropic spacing supported.
std::vector<double> squared_distance_to_zeros(const std::vector<char>& is_one,
                                              const std::array<int, 3>& dims,
                                              const std::array<double, 3>& spacing) {
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    const double big = 1e30;
    std::vector<double> dist(is_one.size());
    for (std::size_t i = 0; i < is_one.size(); ++i) dist[i] = is_one[i] ? big : 0.0;

    auto idx = [&](int x, int y, int z) {
        return (static_cast<std::size_t>(z) * ny + y) * nx + x;
    };

    const int nmax = std::max({nx, ny, nz});
    std::vector<double> f(nmax), d(nmax), z(nmax + 1);
    std::vector<int> v(nmax);

    // x pass
    for (int zz = 0; zz < nz; ++zz)
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) f[x] = dist[idx(x, y, zz)];
            edt_1d(f.data(), d.data(), nx, spacing[0], v.data(), z.data());
            for (int x = 0; x < nx; ++x) dist[idx(x, y, zz)] = d[x];
        }
    // y pass
    for (int zz = 0; zz < nz; ++zz)
        for (int x = 0; x < nx; ++x) {
            for (int y = 0; y < ny; ++y) f[y] = dist[idx(x, y, zz)];
            edt_1d(f.data(), d.data(), ny, spacing[1], v.data(), z.data());
            for (int y = 0; y < ny; ++y) dist[idx(x, y, zz)] = d[y];
        }
    // z pass
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            for (int zz = 0; zz < nz; ++zz) f[zz] = dist[idx(x, y, zz)];
            edt_1d(f.data(), d.data(), nz, spacing[2], v.data(), z.data());
            for (int zz = 0; zz < nz; ++zz) dist[idx(x, y, zz)] = d[zz];
        }
    return dist;
}

}  // namespace

Mask compute_mask(const Geometry& g, const ViewSubset& half, double feather_width) {
    if (half.kind != ViewSubset::Kind::half)
        throw std::invalid_argument("compute_mask: subset kind must be half");
    if (feather_width < 0.0)
        throw std::invalid_argument("compute_mask: feather_width must be >= 0");

    const int nx = g.volume_dims[0], ny = g.volume_dims[1], nz = g.volume_dims[2];
    Mask m;
    m.dims = g.volume_dims;
    m.feather_width = feather_width;
    m.values.assign(static_cast<std::size_t>(nx) * ny * nz, 0.0);

    std::vector<double> angles(half.indices.size());
    for (std::size_t i = 0; i < half.indices.size(); ++i)
        angles[i] = g.view_angles[half.indices[i]];

    std::vector<char> is_one(m.values.size(), 0);
    parallel_for(static_cast<std::int64_t>(nz), [&](std::int64_t iz) {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const auto p = g.voxel_center(ix, iy, static_cast<int>(iz));
                bool complete = true;
                for (double a : angles) {
                    if (!ray_hits_detector(g, a, p)) {
                        complete = false;
                        break;
                    }
                }
                const std::size_t j = m.index(ix, iy, static_cast<int>(iz));
                is_one[j] = complete ? 1 : 0;
                m.values[j] = complete ? 1.0 : 0.0;
            }
    });

    if (feather_width > 0.0) {
        const bool any_zero = std::find(is_one.begin(), is_one.end(), char(0)) != is_one.end();
        if (any_zero) {
            const auto d2 = squared_distance_to_zeros(is_one, m.dims, g.voxel_size);
            for (std::size_t j = 0; j < m.values.size(); ++j) {
                if (!is_one[j]) continue;
                m.values[j] = std::min(1.0, std::sqrt(d2[j]) / feather_width);
            }
        }
    }
    return m;
}

Mask mask_from_volume(const Volume& vol, const Geometry& g) {
    if (vol.dims != g.volume_dims)
        throw std::invalid_argument("mask: dimensions do not match geometry");
    for (double x : vol.values)
        if (!(x >= 0.0 && x <= 1.0))
            throw std::invalid_argument("mask: values must lie in [0,1]");
    Mask m;
    m.dims = vol.dims;
    m.feather_width = 0.0;
    m.values = vol.values;
    return m;
}

}  // namespace saw
