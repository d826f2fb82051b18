#include "saw/weights.hpp"

#include <cmath>
#include <stdexcept>

namespace saw {

Weights statistical_weights(const Sinogram& y, NoiseModel model) {
    for (double v : y.values)
        if (!std::isfinite(v))
            throw std::invalid_argument("statistical_weights: sinogram must be finite");

    Weights w;
    w.num_views = y.num_views;
    w.detector_rows = y.detector_rows;
    w.detector_cols = y.detector_cols;
    w.values.resize(y.values.size());
    if (model == NoiseModel::uniform) {
        std::fill(w.values.begin(), w.values.end(), 1.0);
    } else {
        for (std::size_t i = 0; i < y.values.size(); ++i)
            w.values[i] = std::exp(-y.values[i]);
    }
    return w;
}

double parker_weight(double beta, double gamma, double delta) {
    const double span = M_PI + 2.0 * delta;
    if (beta < 0.0 || beta > span) return 0.0;

    const double ramp_in = 2.0 * (delta - gamma);   // [0, ramp_in): rising ramp
    const double ramp_out = M_PI - 2.0 * gamma;     // [ramp_out, span]: falling ramp
    if (beta < ramp_in) {
        const double s = std::sin(M_PI / 4.0 * beta / (delta - gamma));
        return s * s;
    }
    if (beta > ramp_out) {
        const double s = std::sin(M_PI / 4.0 * (span - beta) / (delta + gamma));
        return s * s;
    }
    return 1.0;
}

TransitionWeights view_transition_weights(const Geometry& g, const ViewSubset& half,
                                          TransitionMode mode) {
    if (half.kind != ViewSubset::Kind::half)
        throw std::invalid_argument("view_transition_weights: subset kind must be half");

    TransitionWeights tw;
    tw.num_views = g.num_views;
    tw.detector_cols = g.detector_cols;
    tw.values.assign(static_cast<std::size_t>(g.num_views) * g.detector_cols, 0.0);

    if (mode == TransitionMode::binary) {
        for (int view : half.indices)
            for (int c = 0; c < g.detector_cols; ++c)
                tw.values[static_cast<std::size_t>(view) * g.detector_cols + c] = 1.0;
        return tw;
    }

    // Parker mode: parameterize each selected view by its angle into the span
    // and each column by its in-plane fan offset. The overscan half-angle
    // delta is derived from the actual whole-view span, so conjugate weights
    // sum to 1 over the subset even when the span exceeds pi + fan.
    const double step = g.view_spacing();
    const double span = (static_cast<double>(half.indices.size()) - 1.0) * step;
    const double delta = (span - M_PI) / 2.0;
    if (delta <= 0.0)
        throw std::invalid_argument("view_transition_weights: half-scan span below pi");

    for (std::size_t i = 0; i < half.indices.size(); ++i) {
        const int view = half.indices[i];
        const double beta = static_cast<double>(i) * step;
        for (int c = 0; c < g.detector_cols; ++c) {
            const double u = (c - (g.detector_cols - 1) / 2.0) * g.detector_col_spacing;
            // Fan offset sign matches the ray conjugacy (beta + pi + 2*gamma, -gamma)
            // for counterclockwise view progression.
            const double gamma = std::atan2(-u, g.source_to_detector);
            tw.values[static_cast<std::size_t>(view) * g.detector_cols + c] =
                parker_weight(beta, gamma, delta);
        }
    }
    return tw;
}

}  // namespace saw
