#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "saw/weights.hpp"

using namespace saw;

namespace {

GeometryConfig base_config() {
    GeometryConfig c;
    c.source_to_iso_mm = 300.0;
    c.source_to_detector_mm = 480.0;
    c.detector_cols = 48;
    c.detector_rows = 4;
    c.detector_col_spacing_mm = 10.0;
    c.detector_row_spacing_mm = 8.0;
    c.num_views = 72;
    c.volume_dims = {8, 8, 8};
    c.voxel_size_mm = {2.0, 2.0, 2.0};
    return c;
}

// Fan offset of a detector column, consistent with the ray conjugacy used by
// the Parker parameterization.
double column_gamma(const Geometry& g, int col) {
    const double u = (col - (g.detector_cols - 1) / 2.0) * g.detector_col_spacing;
    return std::atan2(-u, g.source_to_detector);
}

// In-plane line parameters (angle mod pi, signed distance) of the ray leaving
// the source at view angle beta with fan offset gamma.
std::pair<double, double> ray_line(double beta, double gamma, double R) {
    double theta = std::fmod(beta + gamma, 2.0 * M_PI);
    double s = -R * std::sin(gamma);
    if (theta < 0.0) theta += 2.0 * M_PI;
    if (theta >= M_PI) {
        theta -= M_PI;
        s = -s;
    }
    return {theta, s};
}

}  // namespace

TEST_CASE("statistical weights") {
    Sinogram y(2, 1, 2);
    y.values = {0.0, 1.0, std::log(4.0), 2.5};  // ascending line integrals

    SUBCASE("uniform model is all ones") {
        const Weights w = statistical_weights(y, NoiseModel::uniform);
        for (double v : w.values) CHECK(v == 1.0);
    }
    SUBCASE("photon model is exp(-y)") {
        const Weights w = statistical_weights(y, NoiseModel::photon);
        CHECK(w.values[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(w.values[2] == doctest::Approx(0.25).epsilon(1e-12));
        // strictly decreasing in y
        CHECK(w.values[1] < w.values[0]);
        CHECK(w.values[2] < w.values[1]);
        CHECK(w.values[3] < w.values[2]);
        for (double v : w.values) CHECK(v >= 0.0);
    }
    SUBCASE("non-finite sinogram rejected") {
        y.values[1] = std::nan("");
        CHECK_THROWS_AS(statistical_weights(y, NoiseModel::uniform), std::invalid_argument);
    }
}

TEST_CASE("binary transition weights are the half-subset indicator") {
    const Geometry g = make_geometry(base_config());
    const ViewSubset half = half_scan_views(g, 10);
    const TransitionWeights tw = view_transition_weights(g, half, TransitionMode::binary);
    for (int v = 0; v < g.num_views; ++v)
        for (int c = 0; c < g.detector_cols; ++c)
            CHECK(tw.at(v, c) == (half.contains(v) ? 1.0 : 0.0));
}

TEST_CASE("parker weights") {
    const Geometry g = make_geometry(base_config());
    const ViewSubset half = half_scan_views(g, 0);
    const TransitionWeights tw = view_transition_weights(g, half, TransitionMode::parker);
    const double step = g.view_spacing();
    const double span = (static_cast<double>(half.indices.size()) - 1.0) * step;
    const double delta = (span - M_PI) / 2.0;

    SUBCASE("bounded in [0,1], zero outside the span") {
        for (int v = 0; v < g.num_views; ++v)
            for (int c = 0; c < g.detector_cols; ++c) {
                CHECK(tw.at(v, c) >= 0.0);
                CHECK(tw.at(v, c) <= 1.0);
                if (!half.contains(v)) CHECK(tw.at(v, c) == 0.0);
            }
    }
    SUBCASE("center of the span is redundancy-free: weight 1 for all columns") {
        const int mid = half.indices[half.indices.size() / 2];
        for (int c = 0; c < g.detector_cols; ++c)
            CHECK(tw.at(mid, c) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("conjugacy of the (beta, gamma) parameterization is geometric") {
        // (beta, gamma) and (beta + pi + 2 gamma, -gamma) must traverse the
        // same in-plane line
        for (int c : {0, 5, 23, 24, 40, 47}) {
            const double gamma = column_gamma(g, c);
            for (double beta : {0.1, 0.9, 2.2}) {
                const auto l1 = ray_line(beta, gamma, g.source_to_iso);
                const auto l2 = ray_line(beta + M_PI + 2.0 * gamma, -gamma, g.source_to_iso);
                CHECK(l1.first == doctest::Approx(l2.first).epsilon(1e-9));
                CHECK(l1.second == doctest::Approx(l2.second).epsilon(1e-9));
            }
        }
    }
    SUBCASE("conjugate-ray weights sum to one over the span") {
        // enumerate a coarse fan-beam grid of rays whose conjugates also fall
        // inside the span
        for (int c = 0; c < g.detector_cols; c += 3) {
            const double gamma = column_gamma(g, c);
            for (int i = 0; i < 200; ++i) {
                const double beta = span * (i + 0.5) / 200.0;
                const double beta_conj = beta + M_PI + 2.0 * gamma;
                const bool conj_inside = beta_conj >= 0.0 && beta_conj <= span;
                const bool conj_before = beta - (M_PI + 2.0 * (-gamma)) >= 0.0;
                if (!conj_inside && !conj_before) {
                    // measured exactly once: weight must be 1
                    CHECK(parker_weight(beta, gamma, delta) == doctest::Approx(1.0).epsilon(1e-10));
                } else if (conj_inside) {
                    const double sum = parker_weight(beta, gamma, delta) +
                                       parker_weight(beta_conj, -gamma, delta);
                    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
                }
            }
        }
    }
    SUBCASE("continuous in view angle: jumps bounded by the ramp slope") {
        for (int c = 0; c < g.detector_cols; ++c) {
            const double gamma = column_gamma(g, c);
            const double max_slope = (M_PI / 4.0) / std::max(1e-9, delta - std::abs(gamma));
            const double bound = std::min(1.0, step * max_slope) + 1e-12;
            for (std::size_t i = 1; i < half.indices.size(); ++i) {
                const double jump =
                    std::abs(tw.at(half.indices[i], c) - tw.at(half.indices[i - 1], c));
                CHECK(jump <= bound);
            }
        }
    }
}

TEST_CASE("parker on a full subset is rejected") {
    const Geometry g = make_geometry(base_config());
    CHECK_THROWS_AS(view_transition_weights(g, full_scan_views(g), TransitionMode::parker),
                    std::invalid_argument);
}
