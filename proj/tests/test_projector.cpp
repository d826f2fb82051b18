#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "saw/projector.hpp"

using namespace saw;

namespace {

// Odd dims so a voxel center and a detector element sit exactly on the
// central axis.
GeometryConfig chord_config() {
    GeometryConfig c;
    c.source_to_iso_mm = 200.0;
    c.source_to_detector_mm = 400.0;
    c.detector_cols = 49;
    c.detector_rows = 25;
    c.detector_col_spacing_mm = 4.0;
    c.detector_row_spacing_mm = 4.0;
    c.num_views = 24;
    // fine grid: the 1% chord tolerance must absorb the rasterized-ball
    // staircase, which is about half a voxel of path per boundary crossing
    c.volume_dims = {97, 97, 97};
    c.voxel_size_mm = {0.5, 0.5, 0.5};
    return c;
}

GeometryConfig adjoint_config() {
    GeometryConfig c;
    c.source_to_iso_mm = 120.0;
    c.source_to_detector_mm = 200.0;
    c.detector_cols = 16;
    c.detector_rows = 12;
    c.detector_col_spacing_mm = 8.0;
    c.detector_row_spacing_mm = 8.0;
    c.num_views = 24;
    c.volume_dims = {16, 16, 16};
    c.voxel_size_mm = {3.0, 3.0, 3.0};
    return c;
}

Volume rasterize_ball(const Geometry& g, double radius, double density) {
    Volume v = g.make_volume();
    for (int iz = 0; iz < g.volume_dims[2]; ++iz)
        for (int iy = 0; iy < g.volume_dims[1]; ++iy)
            for (int ix = 0; ix < g.volume_dims[0]; ++ix) {
                const auto p = g.voxel_center(ix, iy, iz);
                if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= radius * radius)
                    v.at(ix, iy, iz) = density;
            }
    return v;
}

Volume random_volume(const Geometry& g, std::mt19937& rng) {
    Volume v = g.make_volume();
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& x : v.values) x = dist(rng);
    return v;
}

Sinogram random_sinogram(const Geometry& g, std::mt19937& rng) {
    Sinogram s = g.make_sinogram();
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& x : s.values) x = dist(rng);
    return s;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

TEST_CASE("forward projection of the zero volume is zero") {
    const Geometry g = make_geometry(adjoint_config());
    const Sinogram s = forward_project(g.make_volume(), g, full_scan_views(g));
    for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("central ray through a unit ball measures the chord length") {
    const Geometry g = make_geometry(chord_config());
    // half-integer radius in voxels, so the rasterized boundary straddles the
    // analytic one symmetrically
    const double radius = 20.25;
    const Volume ball = rasterize_ball(g, radius, 1.0);
    const Sinogram s = forward_project(ball, g, full_scan_views(g));

    const int center_row = 12, center_col = 24;
    for (int view : {0, 3, 7, 13}) {
        const double chord = s.values[s.index(view, center_row, center_col)];
        CHECK(chord == doctest::Approx(2.0 * radius).epsilon(0.01));
    }
}

TEST_CASE("forward projection is linear and nonnegative on nonnegative input") {
    const Geometry g = make_geometry(adjoint_config());
    std::mt19937 rng(11);
    const Volume x1 = random_volume(g, rng);
    const Volume x2 = random_volume(g, rng);
    const double a = 1.7, b = -0.4;

    Volume combo = g.make_volume();
    for (std::size_t j = 0; j < combo.values.size(); ++j)
        combo.values[j] = a * x1.values[j] + b * x2.values[j];

    const ViewSubset all = full_scan_views(g);
    const Sinogram s1 = forward_project(x1, g, all);
    const Sinogram s2 = forward_project(x2, g, all);
    const Sinogram sc = forward_project(combo, g, all);
    for (std::size_t i = 0; i < sc.values.size(); ++i)
        CHECK(sc.values[i] ==
              doctest::Approx(a * s1.values[i] + b * s2.values[i]).epsilon(1e-10));

    Volume pos = x1;
    for (auto& v : pos.values) v = std::abs(v);
    const Sinogram sp = forward_project(pos, g, all);
    for (double v : sp.values) CHECK(v >= 0.0);
}

TEST_CASE("half-subset forward projection zero-fills unselected views") {
    const Geometry g = make_geometry(adjoint_config());
    std::mt19937 rng(3);
    const Volume x = random_volume(g, rng);
    const ViewSubset half = half_scan_views(g, 4);
    const Sinogram s = forward_project(x, g, half);
    for (int v = 0; v < g.num_views; ++v) {
        const bool selected = half.contains(v);
        bool any = false;
        for (int r = 0; r < g.detector_rows; ++r)
            for (int c = 0; c < g.detector_cols; ++c)
                if (s.values[s.index(v, r, c)] != 0.0) any = true;
        if (selected)
            CHECK(any);
        else
            CHECK(!any);
    }
}

TEST_CASE("back projection is the exact adjoint") {
    const Geometry g = make_geometry(adjoint_config());
    std::mt19937 rng(42);
    for (const bool use_half : {false, true}) {
        const ViewSubset views = use_half ? half_scan_views(g, 6) : full_scan_views(g);
        for (int trial = 0; trial < 3; ++trial) {
            const Volume x = random_volume(g, rng);
            const Sinogram s = random_sinogram(g, rng);
            const Sinogram ax = forward_project(x, g, views);
            const Volume ats = back_project(s, g, views);
            const double lhs = dot(ax.values, s.values);
            const double rhs = dot(x.values, ats.values);
            CHECK(std::abs(lhs - rhs) <= 1e-5 * std::max(std::abs(lhs), std::abs(rhs)));
        }
    }
}

TEST_CASE("back projection of a zero sinogram is zero") {
    const Geometry g = make_geometry(adjoint_config());
    const Volume v = back_project(g.make_sinogram(), g, full_scan_views(g));
    for (double x : v.values) CHECK(x == 0.0);
}

TEST_CASE("single detector element back-projects only inside its ray footprint") {
    const Geometry g = make_geometry(adjoint_config());
    Sinogram s = g.make_sinogram();
    const int view = 5, row = 4, col = 11;
    s.values[s.index(view, row, col)] = 1.0;
    const Volume v = back_project(s, g, full_scan_views(g));

    // reconstruct the ray segment and check every touched voxel lies within
    // one interpolation footprint of it
    const double angle = g.view_angles[view];
    const double R = g.source_to_iso, D = g.source_to_detector;
    const std::array<double, 3> src = {R * std::cos(angle), R * std::sin(angle), 0.0};
    const double u = (col - (g.detector_cols - 1) / 2.0) * g.detector_col_spacing;
    const double w = (row - (g.detector_rows - 1) / 2.0) * g.detector_row_spacing;
    const std::array<double, 3> elem = {(R - D) * std::cos(angle) - u * std::sin(angle),
                                        (R - D) * std::sin(angle) + u * std::cos(angle), w};
    const std::array<double, 3> d = {elem[0] - src[0], elem[1] - src[1], elem[2] - src[2]};
    const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);

    std::size_t touched = 0;
    const double reach = std::sqrt(3.0) * 3.0 + 1.5;  // voxel diagonal + step slack
    for (int iz = 0; iz < g.volume_dims[2]; ++iz)
        for (int iy = 0; iy < g.volume_dims[1]; ++iy)
            for (int ix = 0; ix < g.volume_dims[0]; ++ix) {
                if (v.at(ix, iy, iz) == 0.0) continue;
                ++touched;
                const auto p = g.voxel_center(ix, iy, iz);
                // distance from voxel center to the source->element segment
                const double t = std::clamp(((p[0] - src[0]) * d[0] + (p[1] - src[1]) * d[1] +
                                             (p[2] - src[2]) * d[2]) /
                                                (len * len),
                                            0.0, 1.0);
                const double qx = src[0] + t * d[0] - p[0];
                const double qy = src[1] + t * d[1] - p[1];
                const double qz = src[2] + t * d[2] - p[2];
                CHECK(std::sqrt(qx * qx + qy * qy + qz * qz) <= reach);
            }
    CHECK(touched > 0);
    CHECK(touched < v.values.size() / 8);
}

TEST_CASE("masked back projection composes half and full back projections") {
    const Geometry g = make_geometry(adjoint_config());
    std::mt19937 rng(9);
    const Sinogram s = random_sinogram(g, rng);
    const ViewSubset half = half_scan_views(g, 2);
    const Volume bp_half = back_project(s, g, half);
    const Volume bp_full = back_project(s, g, full_scan_views(g));

    auto check_composition = [&](const Mask& m) {
        const Volume got = masked_back_project(s, g, half, m);
        double max_diff = 0.0;
        for (std::size_t j = 0; j < got.values.size(); ++j) {
            const double expect =
                m.values[j] * bp_half.values[j] + (1.0 - m.values[j]) * bp_full.values[j];
            max_diff = std::max(max_diff, std::abs(got.values[j] - expect));
        }
        CHECK(max_diff < 1e-12);
    };

    Mask binary;
    binary.dims = g.volume_dims;
    binary.values.resize(bp_full.values.size());
    std::bernoulli_distribution coin(0.4);
    for (auto& v : binary.values) v = coin(rng) ? 1.0 : 0.0;
    check_composition(binary);

    Mask feathered = binary;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& v : feathered.values) v = unit(rng);
    check_composition(feathered);

    SUBCASE("all-ones mask reduces to the half-scan back projection") {
        Mask ones = binary;
        std::fill(ones.values.begin(), ones.values.end(), 1.0);
        const Volume got = masked_back_project(s, g, half, ones);
        for (std::size_t j = 0; j < got.values.size(); ++j)
            CHECK(got.values[j] == bp_half.values[j]);
    }
    SUBCASE("all-zeros mask reduces to the full-scan back projection") {
        Mask zeros = binary;
        std::fill(zeros.values.begin(), zeros.values.end(), 0.0);
        const Volume got = masked_back_project(s, g, half, zeros);
        for (std::size_t j = 0; j < got.values.size(); ++j)
            CHECK(got.values[j] == bp_full.values[j]);
    }
    SUBCASE("per-voxel value stays between the two back projections") {
        Mask m = binary;
        for (auto& v : m.values) v = unit(rng);
        const Volume got = masked_back_project(s, g, half, m);
        for (std::size_t j = 0; j < got.values.size(); ++j) {
            const double lo = std::min(bp_half.values[j], bp_full.values[j]);
            const double hi = std::max(bp_half.values[j], bp_full.values[j]);
            CHECK(got.values[j] >= lo - 1e-12);
            CHECK(got.values[j] <= hi + 1e-12);
        }
    }
}

TEST_CASE("masked back projection is linear in the sinogram") {
    const Geometry g = make_geometry(adjoint_config());
    std::mt19937 rng(13);
    const Sinogram s1 = random_sinogram(g, rng);
    const Sinogram s2 = random_sinogram(g, rng);
    const ViewSubset half = half_scan_views(g, 0);
    Mask m;
    m.dims = g.volume_dims;
    m.values.resize(static_cast<std::size_t>(g.volume_dims[0]) * g.volume_dims[1] *
                    g.volume_dims[2]);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& v : m.values) v = unit(rng);

    const double a = 0.8, b = -1.3;
    Sinogram combo = s1;
    for (std::size_t i = 0; i < combo.values.size(); ++i)
        combo.values[i] = a * s1.values[i] + b * s2.values[i];

    const Volume v1 = masked_back_project(s1, g, half, m);
    const Volume v2 = masked_back_project(s2, g, half, m);
    const Volume vc = masked_back_project(combo, g, half, m);
    for (std::size_t j = 0; j < vc.values.size(); ++j)
        CHECK(vc.values[j] ==
              doctest::Approx(a * v1.values[j] + b * v2.values[j]).epsilon(1e-9));
}

TEST_CASE("shape mismatches are rejected") {
    const Geometry g = make_geometry(adjoint_config());
    Volume wrong({4, 4, 4}, {1, 1, 1});
    CHECK_THROWS_AS(forward_project(wrong, g, full_scan_views(g)), std::invalid_argument);
    Sinogram swrong(2, 2, 2);
    CHECK_THROWS_AS(back_project(swrong, g, full_scan_views(g)), std::invalid_argument);
    Mask m;
    m.dims = {4, 4, 4};
    m.values.assign(64, 0.0);
    CHECK_THROWS_AS(masked_back_project(g.make_sinogram(), g, half_scan_views(g, 0), m),
                    std::invalid_argument);
    CHECK_THROWS_AS(masked_back_project(g.make_sinogram(), g, full_scan_views(g), m),
                    std::invalid_argument);
}
