#pragma once

#include <vector>

#include "saw/geometry.hpp"
#include "saw/types.hpp"

namespace saw {

/// Diagonal statistical weighting on the data-fidelity term; one nonnegative
/// value per sinogram element.
struct Weights {
    int num_views = 0;
    int detector_rows = 0;
    int detector_cols = 0;
    std::vector<double> values;

    std::size_t index(int view, int row, int col) const {
        return (static_cast<std::size_t>(view) * detector_rows + row) * detector_cols + col;
    }
    bool matches(const Sinogram& s) const {
        return num_views == s.num_views && detector_rows == s.detector_rows &&
               detector_cols == s.detector_cols;
    }
};

enum class NoiseModel { uniform, photon };

/// uniform: all ones. photon: w_i = exp(-y_i), proportional to the expected
/// photon count behind line integral y_i.
Weights statistical_weights(const Sinogram& y, NoiseModel model);

/// Per-(view, column) weight in [0,1] multiplying the half-scan branch of the
/// masked back projector.
struct TransitionWeights {
    int num_views = 0;
    int detector_cols = 0;
    std::vector<double> values;

    double at(int view, int col) const {
        return values[static_cast<std::size_t>(view) * detector_cols + col];
    }
};

enum class TransitionMode { binary, parker };

/// binary: indicator of the half subset. parker: classic short-scan
/// redundancy weighting (smooth ramps at both angular ends, conjugate-ray
/// weights summing to 1) over the half-scan span, zero outside it.
TransitionWeights view_transition_weights(const Geometry& g, const ViewSubset& half,
                                          TransitionMode mode);

/// Continuous Parker weight for a ray at angle beta into the short-scan span
/// (beta in [0, pi + 2*delta]) with in-plane fan offset gamma, where delta is
/// the half overscan angle (span - pi) / 2. Exposed for the conjugate-ray
/// tests.
double parker_weight(double beta, double gamma, double delta);

}  // namespace saw
