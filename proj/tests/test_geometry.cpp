#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "saw/geometry.hpp"

using namespace saw;

namespace {

GeometryConfig desk_scale_config() {
    GeometryConfig c;
    c.source_to_iso_mm = 300.0;
    c.source_to_detector_mm = 480.0;
    c.detector_cols = 48;
    c.detector_rows = 24;
    c.detector_col_spacing_mm = 10.0;
    c.detector_row_spacing_mm = 8.0;
    c.num_views = 72;
    c.volume_dims = {64, 64, 64};
    c.voxel_size_mm = {2.0, 2.0, 2.0};
    return c;
}

GeometryConfig small_odd_config() {
    GeometryConfig c;
    c.source_to_iso_mm = 300.0;
    c.source_to_detector_mm = 480.0;
    c.detector_cols = 49;
    c.detector_rows = 13;
    c.detector_col_spacing_mm = 10.0;
    c.detector_row_spacing_mm = 8.0;
    c.num_views = 36;
    c.volume_dims = {17, 17, 17};
    c.voxel_size_mm = {6.0, 6.0, 6.0};
    return c;
}

// Independent detector-hit test, written from the plane-intersection
// equations rather than the library's depth/scale shortcut.
bool oracle_hits(const Geometry& g, double angle, const std::array<double, 3>& p) {
    const double R = g.source_to_iso, D = g.source_to_detector;
    const std::array<double, 3> src = {R * std::cos(angle), R * std::sin(angle), 0.0};
    const std::array<double, 3> center = {(R - D) * std::cos(angle), (R - D) * std::sin(angle),
                                          0.0};
    const std::array<double, 3> normal = {std::cos(angle), std::sin(angle), 0.0};
    const std::array<double, 3> dir = {p[0] - src[0], p[1] - src[1], p[2] - src[2]};

    const double denom = dir[0] * normal[0] + dir[1] * normal[1] + dir[2] * normal[2];
    if (denom >= 0.0) return false;  // ray runs away from the detector plane
    const double t = ((center[0] - src[0]) * normal[0] + (center[1] - src[1]) * normal[1] +
                      (center[2] - src[2]) * normal[2]) /
                     denom;
    if (t <= 0.0) return false;
    const std::array<double, 3> hit = {src[0] + t * dir[0], src[1] + t * dir[1],
                                       src[2] + t * dir[2]};
    const std::array<double, 3> uaxis = {-std::sin(angle), std::cos(angle), 0.0};
    const double u = (hit[0] - center[0]) * uaxis[0] + (hit[1] - center[1]) * uaxis[1];
    const double v = hit[2] - center[2];
    return std::abs(u) <= g.detector_cols * g.detector_col_spacing / 2.0 &&
           std::abs(v) <= g.detector_rows * g.detector_row_spacing / 2.0;
}

Mask oracle_mask(const Geometry& g, const ViewSubset& half) {
    Mask m;
    m.dims = g.volume_dims;
    m.feather_width = 0.0;
    m.values.assign(static_cast<std::size_t>(g.volume_dims[0]) * g.volume_dims[1] *
                        g.volume_dims[2],
                    0.0);
    for (int iz = 0; iz < g.volume_dims[2]; ++iz)
        for (int iy = 0; iy < g.volume_dims[1]; ++iy)
            for (int ix = 0; ix < g.volume_dims[0]; ++ix) {
                const auto p = g.voxel_center(ix, iy, iz);
                bool all = true;
                for (int view : half.indices)
                    if (!oracle_hits(g, g.view_angles[view], p)) {
                        all = false;
                        break;
                    }
                m.values[m.index(ix, iy, iz)] = all ? 1.0 : 0.0;
            }
    return m;
}

}  // namespace

TEST_CASE("make_geometry derives equispaced angles") {
    GeometryConfig c = desk_scale_config();
    c.num_views = 360;
    const Geometry g = make_geometry(c);
    CHECK(g.view_angles[1] - g.view_angles[0] == doctest::Approx(M_PI / 180.0).epsilon(1e-12));
    CHECK(g.view_angles.size() == 360);
    for (std::size_t i = 1; i < g.view_angles.size(); ++i)
        CHECK(g.view_angles[i] > g.view_angles[i - 1]);
}

TEST_CASE("fan angle from detector width") {
    GeometryConfig c = desk_scale_config();
    SUBCASE("detector subtending 2*atan(1)") {
        // cols * spacing = 2 * source_to_detector
        c.detector_cols = 96;
        c.detector_col_spacing_mm = 10.0;
        c.source_to_detector_mm = 480.0;
        const Geometry g = make_geometry(c);
        CHECK(g.fan_angle() == doctest::Approx(M_PI / 2.0).epsilon(1e-12));
    }
    SUBCASE("desk-scale default") {
        // 2 * atan(240 / 480), evaluated by hand
        const Geometry g = make_geometry(c);
        CHECK(g.fan_angle() == doctest::Approx(0.9272952180016122).epsilon(1e-12));
    }
}

TEST_CASE("make_geometry rejects invalid fields by name") {
    GeometryConfig c = desk_scale_config();
    c.source_to_iso_mm = -1.0;
    CHECK_THROWS_WITH_AS(make_geometry(c), doctest::Contains("source_to_iso_mm"),
                         std::invalid_argument);

    c = desk_scale_config();
    c.source_to_detector_mm = 200.0;  // less than source_to_iso
    CHECK_THROWS_WITH_AS(make_geometry(c), doctest::Contains("source_to_detector_mm"),
                         std::invalid_argument);

    c = desk_scale_config();
    c.detector_cols = 0;
    CHECK_THROWS_WITH_AS(make_geometry(c), doctest::Contains("detector_cols"),
                         std::invalid_argument);

    c = desk_scale_config();
    c.num_views = 1;
    CHECK_THROWS_WITH_AS(make_geometry(c), doctest::Contains("num_views"),
                         std::invalid_argument);

    c = desk_scale_config();
    c.voxel_size_mm[1] = 0.0;
    CHECK_THROWS_WITH_AS(make_geometry(c), doctest::Contains("voxel_size_mm"),
                         std::invalid_argument);
}

TEST_CASE("half_scan_views whole-view ceiling convention") {
    SUBCASE("vanishing fan angle: 181 of 360 views") {
        GeometryConfig c = desk_scale_config();
        c.num_views = 360;
        c.detector_cols = 1;
        c.detector_col_spacing_mm = 1e-13;  // fan angle indistinguishable from zero
        const Geometry g = make_geometry(c);
        const ViewSubset s = half_scan_views(g, 0);
        CHECK(s.indices.size() == 181);
        CHECK(s.kind == ViewSubset::Kind::half);
    }
    SUBCASE("fan angle pi/3: 241 of 360 views") {
        GeometryConfig c = desk_scale_config();
        c.num_views = 360;
        c.source_to_detector_mm = 480.0;
        c.detector_cols = 100;
        // cols * spacing / 2 = D * tan(pi/6)
        c.detector_col_spacing_mm = 2.0 * 480.0 * std::tan(M_PI / 6.0) / 100.0;
        const Geometry g = make_geometry(c);
        CHECK(g.fan_angle() == doctest::Approx(M_PI / 3.0).epsilon(1e-12));
        CHECK(half_scan_views(g, 0).indices.size() == 241);
    }
    SUBCASE("wraparound stays contiguous modulo num_views") {
        GeometryConfig c = desk_scale_config();
        c.num_views = 360;
        const Geometry g = make_geometry(c);
        const ViewSubset s = half_scan_views(g, 350);
        REQUIRE(s.indices.size() > 20);
        CHECK(s.indices[0] == 350);
        CHECK(s.indices[9] == 359);
        CHECK(s.indices[10] == 0);
        for (std::size_t i = 1; i < s.indices.size(); ++i)
            CHECK(s.indices[i] == (s.indices[i - 1] + 1) % 360);
    }
    SUBCASE("span that cannot fit in whole views is rejected") {
        GeometryConfig c = desk_scale_config();
        c.num_views = 4;
        c.detector_cols = 100;
        c.detector_col_spacing_mm = 96.0;  // fan angle about 2.94 rad
        const Geometry g = make_geometry(c);
        CHECK(g.fan_angle() > 2.9);
        CHECK_THROWS_AS(half_scan_views(g, 0), std::invalid_argument);
    }
    SUBCASE("span property across random geometries") {
        std::mt19937 rng(7);
        std::uniform_int_distribution<int> views_dist(16, 400);
        std::uniform_real_distribution<double> width_dist(10.0, 700.0);
        for (int trial = 0; trial < 50; ++trial) {
            GeometryConfig c = desk_scale_config();
            c.num_views = views_dist(rng);
            c.detector_cols = 48;
            c.detector_col_spacing_mm = width_dist(rng) / 48.0;
            const Geometry g = make_geometry(c);
            const ViewSubset s = half_scan_views(g, 0);
            const double span = (static_cast<double>(s.indices.size()) - 1.0) * g.view_spacing();
            const double needed = M_PI + g.fan_angle();
            // floating-boundary convention: exact-integer spans are not
            // charged an extra view, so allow 1e-9 rad of slack
            CHECK(span >= needed - 1e-9);
            CHECK(span < needed + 2.0 * g.view_spacing());
        }
    }
}

TEST_CASE("compute_mask matches the brute-force per-(voxel, view) oracle") {
    const Geometry g = make_geometry(small_odd_config());
    const ViewSubset half = half_scan_views(g, 5);
    const Mask m = compute_mask(g, half, 0.0);
    const Mask oracle = oracle_mask(g, half);

    REQUIRE(m.values.size() == oracle.values.size());
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m.values.size(); ++j) {
        CHECK(m.values[j] == oracle.values[j]);
        CHECK((m.values[j] == 0.0 || m.values[j] == 1.0));
        if (m.values[j] == 1.0) ++ones;
    }
    CHECK(ones > 0);
    CHECK(ones < m.values.size());

    SUBCASE("center slice count >= edge slice count, tabulated by the oracle") {
        auto slice_count = [&](const Mask& mm, int iz) {
            std::size_t n = 0;
            for (int iy = 0; iy < g.volume_dims[1]; ++iy)
                for (int ix = 0; ix < g.volume_dims[0]; ++ix)
                    if (mm.at(ix, iy, iz) == 1.0) ++n;
            return n;
        };
        const int center = g.volume_dims[2] / 2;
        CHECK(slice_count(m, center) == slice_count(oracle, center));
        CHECK(slice_count(m, 0) == slice_count(oracle, 0));
        CHECK(slice_count(m, center) >= slice_count(m, 0));
        CHECK(slice_count(m, center) >= slice_count(m, g.volume_dims[2] - 1));
    }
}

TEST_CASE("mask geometry examples") {
    const Geometry g = make_geometry(small_odd_config());
    const ViewSubset half = half_scan_views(g, 0);
    const Mask m = compute_mask(g, half, 0.0);

    SUBCASE("isocenter voxel at the mid-plane is inside") {
        CHECK(m.at(8, 8, 8) == 1.0);  // odd dims: exact isocenter voxel
    }
    SUBCASE("mid-plane voxel outside the scan FOV radius is outside") {
        GeometryConfig c = small_odd_config();
        c.detector_cols = 9;  // narrow detector: FOV radius ~ 28 mm
        const Geometry gn = make_geometry(c);
        const double fov = gn.source_to_iso * std::sin(gn.fan_angle() / 2.0);
        const Mask mn = compute_mask(gn, half_scan_views(gn, 0), 0.0);
        const auto p = gn.voxel_center(16, 8, 8);
        REQUIRE(std::hypot(p[0], p[1]) > fov);
        CHECK(mn.at(16, 8, 8) == 0.0);
    }
    SUBCASE("on-axis mask is non-increasing with |z|") {
        const int ax = 8, ay = 8;
        for (int iz = 8; iz + 1 < g.volume_dims[2]; ++iz)
            CHECK(m.at(ax, ay, iz) >= m.at(ax, ay, iz + 1));
        for (int iz = 8; iz > 0; --iz)
            CHECK(m.at(ax, ay, iz) >= m.at(ax, ay, iz - 1));
    }
    SUBCASE("enlarging detector rows never shrinks the mask") {
        GeometryConfig c = small_odd_config();
        c.detector_rows = 17;
        const Geometry gbig = make_geometry(c);
        const Mask mbig = compute_mask(gbig, half_scan_views(gbig, 0), 0.0);
        for (std::size_t j = 0; j < m.values.size(); ++j)
            CHECK(mbig.values[j] >= m.values[j]);
    }
}

TEST_CASE("mask feathering ramps linearly with the distance to the boundary") {
    const Geometry g = make_geometry(small_odd_config());
    const ViewSubset half = half_scan_views(g, 0);
    const Mask hard = compute_mask(g, half, 0.0);
    const double feather = 15.0;
    const Mask soft = compute_mask(g, half, feather);

    // brute-force distance to the nearest zero voxel
    std::vector<std::array<int, 3>> zeros;
    const int n = g.volume_dims[0];
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                if (hard.at(ix, iy, iz) == 0.0) zeros.push_back({ix, iy, iz});
    REQUIRE(!zeros.empty());

    bool any_fractional = false;
    for (int iz = 0; iz < n; ++iz)
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                const double v = soft.at(ix, iy, iz);
                if (hard.at(ix, iy, iz) == 0.0) {
                    CHECK(v == 0.0);
                    continue;
                }
                double best = 1e300;
                for (const auto& zv : zeros) {
                    const double dx = (zv[0] - ix) * g.voxel_size[0];
                    const double dy = (zv[1] - iy) * g.voxel_size[1];
                    const double dz = (zv[2] - iz) * g.voxel_size[2];
                    best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
                }
                const double expect = std::min(1.0, best / feather);
                CHECK(v == doctest::Approx(expect).epsilon(1e-9));
                if (v > 0.0 && v < 1.0) any_fractional = true;
            }
    CHECK(any_fractional);
}

TEST_CASE("mask from volume validates range") {
    const Geometry g = make_geometry(small_odd_config());
    Volume v = g.make_volume();
    v.values[3] = 0.5;
    CHECK_NOTHROW(mask_from_volume(v, g));
    v.values[3] = 1.5;
    CHECK_THROWS_AS(mask_from_volume(v, g), std::invalid_argument);
    Volume wrong({4, 4, 4}, {1, 1, 1});
    CHECK_THROWS_AS(mask_from_volume(wrong, g), std::invalid_argument);
}
