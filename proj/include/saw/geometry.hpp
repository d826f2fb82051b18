#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "saw/types.hpp"

namespace saw {

/// Raw scanner description as read from a config file.
struct GeometryConfig {
    double source_to_iso_mm = 0.0;
    double source_to_detector_mm = 0.0;
    int detector_cols = 0;
    int detector_rows = 0;
    double detector_col_spacing_mm = 0.0;
    double detector_row_spacing_mm = 0.0;
    int num_views = 0;
    double first_angle_rad = 0.0;
    std::array<int, 3> volume_dims{0, 0, 0};
    std::array<double, 3> voxel_size_mm{0.0, 0.0, 0.0};
};

/// Validated axial cone-beam acquisition geometry.
///
/// Conventions: the rotation axis is z. At view angle theta the source sits at
/// source_to_iso * (cos theta, sin theta, 0); the flat detector is centered on
/// the line through source and isocenter at distance source_to_detector from
/// the source, with in-plane axis u = (-sin theta, cos theta, 0) and axial
/// axis v = z. The volume is centered on the isocenter.
struct Geometry {
    double source_to_iso = 0.0;       // mm
    double source_to_detector = 0.0;  // mm
    int detector_cols = 0;
    int detector_rows = 0;
    double detector_col_spacing = 0.0;  // mm at the detector
    double detector_row_spacing = 0.0;  // mm at the detector
    int num_views = 0;
    std::vector<double> view_angles;  // radians, strictly ascending, equispaced
    std::array<int, 3> volume_dims{0, 0, 0};
    std::array<double, 3> voxel_size{0.0, 0.0, 0.0};

    /// In-plane angular aperture of the detector as seen from the source.
    /// Recomputed from the detector description, never stored.
    double fan_angle() const {
        return 2.0 * std::atan((detector_cols * detector_col_spacing / 2.0) /
                               source_to_detector);
    }

    double view_spacing() const { return 2.0 * M_PI / num_views; }

    /// Physical detector half-extents (mm).
    double detector_half_width() const { return detector_cols * detector_col_spacing / 2.0; }
    double detector_half_height() const { return detector_rows * detector_row_spacing / 2.0; }

    /// Voxel center position, volume centered on the isocenter.
    std::array<double, 3> voxel_center(int ix, int iy, int iz) const {
        return {(ix - (volume_dims[0] - 1) / 2.0) * voxel_size[0],
                (iy - (volume_dims[1] - 1) / 2.0) * voxel_size[1],
                (iz - (volume_dims[2] - 1) / 2.0) * voxel_size[2]};
    }

    Volume make_volume() const { return Volume(volume_dims, voxel_size); }
    Sinogram make_sinogram() const {
        return Sinogram(num_views, detector_rows, detector_cols);
    }
};

/// Contiguous (modulo num_views) set of view indices.
struct ViewSubset {
    enum class Kind { full, half };
    std::vector<int> indices;
    Kind kind = Kind::full;

    bool contains(int view) const;
};

/// Per-voxel weight in [0,1]; 1 = back-project from half-scan data only.
struct Mask {
    std::array<int, 3> dims{0, 0, 0};
    double feather_width = 0.0;  // mm
    std::vector<double> values;

    std::size_t index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(iz) * dims[1] + iy) * dims[0] + ix;
    }
    double at(int ix, int iy, int iz) const { return values[index(ix, iy, iz)]; }
};

/// Validates a scanner description and derives the equispaced view angles.
/// Throws std::invalid_argument naming the offending field.
Geometry make_geometry(const GeometryConfig& config);

/// All views, in order.
ViewSubset full_scan_views(const Geometry& g);

/// Smallest contiguous whole-view subset starting at start_index whose
/// angular span is >= pi + fan_angle. View count is
/// ceil((pi + fan) / view_spacing) + 1; indices wrap modulo num_views.
ViewSubset half_scan_views(const Geometry& g, int start_index);

/// True iff the ray from the source through `point` hits the physical
/// detector surface at view angle `angle`.
bool ray_hits_detector(const Geometry& g, double angle, const std::array<double, 3>& point);

/// Half-scan completeness mask: value 1 iff the voxel center projects onto
/// the physical detector for every view in `half`; 0 otherwise. With
/// feather_width > 0 the binary mask is relaxed by a linear ramp over the
/// Euclidean distance to the nearest zero voxel.
Mask compute_mask(const Geometry& g, const ViewSubset& half, double feather_width);

/// Wraps externally supplied per-voxel weights (e.g. read from a file) after
/// validating range and shape against the geometry.
Mask mask_from_volume(const Volume& v, const Geometry& g);

}  // namespace saw
