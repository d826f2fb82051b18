#pragma once

#include "saw/geometry.hpp"
#include "saw/types.hpp"

namespace saw {

/// Feldkamp-style analytical reconstruction over the selected views, used as
/// the iterative initializer.
///
/// Pipeline: per-view cosine pre-weighting on the virtual iso-centered
/// detector, frequency-domain ramp filtering of each detector row (band-
/// limited ramp with a Hann smoothing window), then distance-weighted
/// cone-beam back projection scaled by the angular increment. Full subsets
/// carry the 1/2 redundancy factor; half subsets are Parker-weighted instead.
Volume fbp_init(const Sinogram& y, const Geometry& g, const ViewSubset& views);

}  // namespace saw
