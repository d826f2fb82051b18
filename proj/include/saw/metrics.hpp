#pragma once

#include <array>
#include <vector>

#include "saw/types.hpp"

namespace saw {

struct SliceRmseProfile {
    std::vector<double> rmse;          // one value per z slice
    std::vector<bool> slice_excluded;  // true where no voxel passed the exclusion rule
    bool exclusion_applied = false;
};

/// Per-slice RMSE between a and b over voxels where |reference| > 0
/// (zero-intensity background excluded). Slices with no included voxel
/// report 0 and set their flag.
SliceRmseProfile per_slice_rmse(const Volume& a, const Volume& b, const Volume& reference);

/// Axis-aligned voxel-index box, inclusive bounds.
struct RoiBox {
    int x0, x1, y0, y1, z0, z1;
};

struct InsertMetrics {
    std::array<double, 3> centroid_mm;  // intensity-weighted, after min subtraction
    std::array<double, 3> fwhm_mm;      // per axis, profile through the centroid
};

/// Centroid and per-axis FWHM of the structure inside the ROI. Intensities
/// are measured above the ROI minimum; throws on a flat ROI.
InsertMetrics insert_centroid_and_width(const Volume& x, const RoiBox& roi);

}  // namespace saw
