#pragma once

#include "saw/geometry.hpp"
#include "saw/types.hpp"
#include "saw/weights.hpp"

namespace saw {

/// Ray-driven cone-beam forward projection over the selected views.
///
/// Each detector value is the line integral of x along the source-to-element
/// segment, sampled at a fixed step of half the smallest voxel dimension with
/// trilinear interpolation. The output always has the full sinogram shape;
/// unselected views are zero.
Sinogram forward_project(const Volume& x, const Geometry& g, const ViewSubset& views);

/// Exact transpose of forward_project restricted to the selected views:
/// the same ray sampling and interpolation weights, scattered instead of
/// gathered. Values of s on unselected views are ignored.
Volume back_project(const Sinogram& s, const Geometry& g, const ViewSubset& views);

/// Same kernels over an explicit view-index list (used for ordered subsets
/// and per-view simulation; the ViewSubset overloads call into these).
Sinogram forward_project_views(const Volume& x, const Geometry& g,
                               const std::vector<int>& views);
Volume back_project_views(const Sinogram& s, const Geometry& g,
                          const std::vector<int>& views);

/// Spatially adaptive back projection: per voxel j,
///   result[j] = mask[j] * BP_half[j] + (1 - mask[j]) * BP_full[j],
/// where BP_half back-projects only the half subset (optionally with per-
/// (view, col) transition weights applied to s) and BP_full uses all views.
Volume masked_back_project(const Sinogram& s, const Geometry& g, const ViewSubset& half,
                           const Mask& mask,
                           const TransitionWeights* transition = nullptr);

}  // namespace saw
