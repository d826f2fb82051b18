#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "saw/geometry.hpp"
#include "saw/types.hpp"

namespace saw {

/// Rigid motion of one ellipsoid over the scan, parameterized by scan phase
/// t in [0,1] (one full rotation).
struct Motion {
    enum class Kind { static_, linear_drift, oscillation };
    Kind kind = Kind::static_;
    std::array<double, 3> velocity{0.0, 0.0, 0.0};   // mm per rotation (linear_drift)
    std::array<double, 3> amplitude{0.0, 0.0, 0.0};  // mm (oscillation)
    double period = 1.0;  // fraction of a rotation (oscillation)
    double phase = 0.0;   // radians (oscillation)

    std::array<double, 3> offset(double t) const;
};

struct Ellipsoid {
    std::array<double, 3> center{0.0, 0.0, 0.0};  // mm, at phase 0
    std::array<double, 3> semi_axes{1.0, 1.0, 1.0};  // mm, all > 0
    double rotation_z = 0.0;  // radians, in-plane
    double density = 0.0;     // 1/mm, additive; negative allowed for cavities
    Motion motion;
};

struct PhantomSpec {
    std::vector<Ellipsoid> ellipsoids;

    bool is_static() const;
};

/// Per-voxel sum of densities of the ellipsoids containing the voxel center
/// at scan phase t.
Volume rasterize(const PhantomSpec& spec, double t, const Geometry& g);

/// Simulates acquisition: view v is the forward projection of the phantom at
/// phase v / num_views. With noise, counts are drawn per element from a
/// Poisson law with mean I0 * exp(-line integral), clamped to >= 1, and
/// converted back to line integrals. Deterministic for a fixed seed
/// regardless of threading.
Sinogram simulate_sinogram(const PhantomSpec& spec, const Geometry& g,
                           std::optional<double> noise_i0, std::uint64_t seed);

/// Poisson sample keyed by (seed, view, row, col); exposed for the
/// convergence tests.
std::uint64_t poisson_sample(double mean, std::uint64_t seed, int view, int row, int col);

}  // namespace saw
