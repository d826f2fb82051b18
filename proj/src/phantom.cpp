#include "saw/phantom.hpp"

#include <cmath>
#include <stdexcept>

#include "saw/projector.hpp"
#include "saw/threading.hpp"

namespace saw {

namespace {

// splitmix64; the stream for one sinogram element is seeded by hashing
// (seed, view, row, col) so parallel generation order cannot matter.
inline std::uint64_t sm_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t element_key(std::uint64_t seed, int view, int row, int col) {
    std::uint64_t s = seed;
    std::uint64_t k = sm_next(s);
    s ^= (static_cast<std::uint64_t>(view) + 1) * 0xD6E8FEB86659FD93ULL;
    k ^= sm_next(s);
    s ^= (static_cast<std::uint64_t>(row) + 1) * 0xCA5A826395121157ULL;
    k ^= sm_next(s);
    s ^= (static_cast<std::uint64_t>(col) + 1) * 0xA24BAED4963EE407ULL;
    k ^= sm_next(s);
    return k;
}

// Uniform in the open interval (0, 1).
inline double next_uniform(std::uint64_t& state) {
    return (static_cast<double>(sm_next(state) >> 11) + 0.5) * 0x1.0p-53;
}

// Poisson by inversion (small means).
std::uint64_t poisson_inversion(double mean, std::uint64_t& state) {
    const double limit = std::exp(-mean);
    double prod = next_uniform(state);
    std::uint64_t k = 0;
    while (prod > limit) {
        prod *= next_uniform(state);
        ++k;
    }
    return k;
}

// Poisson by transformed rejection with squeeze (Hörmann's PTRD), valid for
// mean >= 10.
std::uint64_t poisson_ptrd(double mean, std::uint64_t& state) {
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);

    for (;;) {
        double u = next_uniform(state) - 0.5;
        double v = next_uniform(state);
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = k * log_mean - mean - std::lgamma(k + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(k);
    }
}

}  // namespace

std::array<double, 3> Motion::offset(double t) const {
    switch (kind) {
        case Kind::static_:
            return {0.0, 0.0, 0.0};
        case Kind::linear_drift:
            return {velocity[0] * t, velocity[1] * t, velocity[2] * t};
        case Kind::oscillation: {
            const double s = std::sin(2.0 * M_PI * t / period + phase);
            return {amplitude[0] * s, amplitude[1] * s, amplitude[2] * s};
        }
    }
    return {0.0, 0.0, 0.0};
}

bool PhantomSpec::is_static() const {
    for (const auto& e : ellipsoids)
        if (e.motion.kind != Motion::Kind::static_) return false;
    return true;
}

Volume rasterize(const PhantomSpec& spec, double t, const Geometry& g) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("rasterize: phase must be in [0,1]");
    for (const auto& e : spec.ellipsoids) {
        for (double s : e.semi_axes)
            if (!(s > 0.0)) throw std::invalid_argument("rasterize: semi-axes must be > 0");
        if (!std::isfinite(e.density)) throw std::invalid_argument("rasterize: density must be finite");
        if (e.motion.kind == Motion::Kind::oscillation && !(e.motion.period > 0.0))
            throw std::invalid_argument("rasterize: oscillation period must be > 0");
    }

    struct Placed {
        std::array<double, 3> center;
        std::array<double, 3> inv_semi;
        double cos_r, sin_r;
        double density;
    };
    std::vector<Placed> placed;
    placed.reserve(spec.ellipsoids.size());
    for (const auto& e : spec.ellipsoids) {
        const auto off = e.motion.offset(t);
        placed.push_back({{e.center[0] + off[0], e.center[1] + off[1], e.center[2] + off[2]},
                          {1.0 / e.semi_axes[0], 1.0 / e.semi_axes[1], 1.0 / e.semi_axes[2]},
                          std::cos(e.rotation_z), std::sin(e.rotation_z),
                          e.density});
    }

    Volume out = g.make_volume();
    const int nx = g.volume_dims[0], ny = g.volume_dims[1], nz = g.volume_dims[2];
    parallel_for(nz, [&](std::int64_t iz) {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const auto p = g.voxel_center(ix, iy, static_cast<int>(iz));
                double acc = 0.0;
                for (const auto& e : placed) {
                    const double rx = p[0] - e.center[0];
                    const double ry = p[1] - e.center[1];
                    const double rz = p[2] - e.center[2];
                    // rotate into the ellipsoid frame (about z)
                    const double qx = (rx * e.cos_r + ry * e.sin_r) * e.inv_semi[0];
                    const double qy = (-rx * e.sin_r + ry * e.cos_r) * e.inv_semi[1];
                    const double qz = rz * e.inv_semi[2];
                    if (qx * qx + qy * qy + qz * qz <= 1.0) acc += e.density;
                }
                out.values[out.index(ix, iy, static_cast<int>(iz))] = acc;
            }
    });
    return out;
}

std::uint64_t poisson_sample(double mean, std::uint64_t seed, int view, int row, int col) {
    std::uint64_t state = element_key(seed, view, row, col);
    if (mean <= 0.0) return 0;
    if (mean < 10.0) return poisson_inversion(mean, state);
    return poisson_ptrd(mean, state);
}

Sinogram simulate_sinogram(const PhantomSpec& spec, const Geometry& g,
                           std::optional<double> noise_i0, std::uint64_t seed) {
    if (noise_i0 && !(*noise_i0 > 0.0))
        throw std::invalid_argument("simulate_sinogram: photon count I0 must be > 0");

    Sinogram out = g.make_sinogram();
    const ViewSubset all = full_scan_views(g);

    if (spec.is_static()) {
        out = forward_project(rasterize(spec, 0.0, g), g, all);
    } else {
        for (int v = 0; v < g.num_views; ++v) {
            const double t = static_cast<double>(v) / g.num_views;
            const Volume frame = rasterize(spec, t, g);
            const Sinogram sv = forward_project_views(frame, g, {v});
            for (int r = 0; r < g.detector_rows; ++r)
                for (int c = 0; c < g.detector_cols; ++c)
                    out.values[out.index(v, r, c)] = sv.values[sv.index(v, r, c)];
        }
    }

    if (noise_i0) {
        const double i0 = *noise_i0;
        parallel_for(g.num_views, [&](std::int64_t v) {
            for (int r = 0; r < g.detector_rows; ++r)
                for (int c = 0; c < g.detector_cols; ++c) {
                    const std::size_t i = out.index(static_cast<int>(v), r, c);
                    const double mean = i0 * std::exp(-out.values[i]);
                    std::uint64_t counts =
                        poisson_sample(mean, seed, static_cast<int>(v), r, c);
                    if (counts < 1) counts = 1;  // keep the log finite
                    out.values[i] = -std::log(static_cast<double>(counts) / i0);
                }
        });
    }
    return out;
}

}  // namespace saw
