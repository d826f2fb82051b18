#include "saw/projector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "saw/threading.hpp"

namespace saw {

namespace {

constexpr int kBackprojChunks = 16;  // fixed, so merges are thread-count independent

struct RaySetup {
    std::array<double, 3> origin;  // source position
    std::array<double, 3> dir;     // unit direction toward the detector element
    double t0 = 0.0, t1 = 0.0;     // clipped parameter range along dir
    int steps = 0;
    double h = 0.0;  // actual step length (t1 - t0) / steps
};

struct ProjectorContext {
    const Geometry* g;
    double ext[3];   // volume half-extent per axis (mm)
    double inv_voxel[3];
    double half_off[3];  // (n-1)/2 per axis
    double step;     // nominal sampling step

    explicit ProjectorContext(const Geometry& geom) : g(&geom) {
        for (int a = 0; a < 3; ++a) {
            ext[a] = geom.volume_dims[a] * geom.voxel_size[a] / 2.0;
            inv_voxel[a] = 1.0 / geom.voxel_size[a];
            half_off[a] = (geom.volume_dims[a] - 1) / 2.0;
        }
        step = 0.5 * std::min({geom.voxel_size[0], geom.voxel_size[1], geom.voxel_size[2]});
    }
};

// Clips the source->element segment against the physical volume box and fixes
// the midpoint sampling. Returns false if the ray misses the volume.
bool setup_ray(const ProjectorContext& ctx, double angle, int row, int col, RaySetup& ray) {
    const Geometry& g = *ctx.g;
    const double ce = std::cos(angle), se = std::sin(angle);
    const double R = g.source_to_iso, D = g.source_to_detector;

    const std::array<double, 3> src = {R * ce, R * se, 0.0};
    const double u = (col - (g.detector_cols - 1) / 2.0) * g.detector_col_spacing;
    const double v = (row - (g.detector_rows - 1) / 2.0) * g.detector_row_spacing;
    // detector center + u * (-sin, cos, 0) + v * z
    const std::array<double, 3> elem = {(R - D) * ce - u * se, (R - D) * se + u * ce, v};

    std::array<double, 3> d = {elem[0] - src[0], elem[1] - src[1], elem[2] - src[2]};
    const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    for (int a = 0; a < 3; ++a) d[a] /= len;

    double t0 = 0.0, t1 = len;
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (std::abs(src[a]) > ctx.ext[a]) return false;
            continue;
        }
        double ta = (-ctx.ext[a] - src[a]) / d[a];
        double tb = (ctx.ext[a] - src[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t1 > t0)) return false;

    ray.origin = src;
    ray.dir = d;
    ray.t0 = t0;
    ray.t1 = t1;
    ray.steps = std::max(1, static_cast<int>(std::ceil((t1 - t0) / ctx.step)));
    ray.h = (t1 - t0) / ray.steps;
    return true;
}

// Gathers the trilinear sample at one ray point.
inline double sample_trilinear(const ProjectorContext& ctx, const Volume& vol,
                               double px, double py, double pz) {
    const double cx = px * ctx.inv_voxel[0] + ctx.half_off[0];
    const double cy = py * ctx.inv_voxel[1] + ctx.half_off[1];
    const double cz = pz * ctx.inv_voxel[2] + ctx.half_off[2];
    const int ix = static_cast<int>(std::floor(cx));
    const int iy = static_cast<int>(std::floor(cy));
    const int iz = static_cast<int>(std::floor(cz));
    const double fx = cx - ix, fy = cy - iy, fz = cz - iz;

    const int nx = vol.dims[0], ny = vol.dims[1], nz = vol.dims[2];
    double acc = 0.0;
    for (int dz = 0; dz < 2; ++dz) {
        const int z = iz + dz;
        if (z < 0 || z >= nz) continue;
        const double wz = dz ? fz : 1.0 - fz;
        for (int dy = 0; dy < 2; ++dy) {
            const int y = iy + dy;
            if (y < 0 || y >= ny) continue;
            const double wy = dy ? fy : 1.0 - fy;
            for (int dx = 0; dx < 2; ++dx) {
                const int x = ix + dx;
                if (x < 0 || x >= nx) continue;
                const double wx = dx ? fx : 1.0 - fx;
                acc += wz * wy * wx * vol.values[(static_cast<std::size_t>(z) * ny + y) * nx + x];
            }
        }
    }
    return acc;
}

// Scatters value * (the same trilinear weights) into the accumulator.
inline void scatter_trilinear(const ProjectorContext& ctx, std::vector<double>& acc_vol,
                              const std::array<int, 3>& dims,
                              double px, double py, double pz, double value) {
    const double cx = px * ctx.inv_voxel[0] + ctx.half_off[0];
    const double cy = py * ctx.inv_voxel[1] + ctx.half_off[1];
    const double cz = pz * ctx.inv_voxel[2] + ctx.half_off[2];
    const int ix = static_cast<int>(std::floor(cx));
    const int iy = static_cast<int>(std::floor(cy));
    const int iz = static_cast<int>(std::floor(cz));
    const double fx = cx - ix, fy = cy - iy, fz = cz - iz;

    const int nx = dims[0], ny = dims[1], nz = dims[2];
    for (int dz = 0; dz < 2; ++dz) {
        const int z = iz + dz;
        if (z < 0 || z >= nz) continue;
        const double wz = dz ? fz : 1.0 - fz;
        for (int dy = 0; dy < 2; ++dy) {
            const int y = iy + dy;
            if (y < 0 || y >= ny) continue;
            const double wy = dy ? fy : 1.0 - fy;
            for (int dx = 0; dx < 2; ++dx) {
                const int x = ix + dx;
                if (x < 0 || x >= nx) continue;
                const double wx = dx ? fx : 1.0 - fx;
                acc_vol[(static_cast<std::size_t>(z) * ny + y) * nx + x] += wz * wy * wx * value;
            }
        }
    }
}

double integrate_ray(const ProjectorContext& ctx, const Volume& vol, const RaySetup& ray) {
    double acc = 0.0;
    for (int k = 0; k < ray.steps; ++k) {
        const double t = ray.t0 + (k + 0.5) * ray.h;
        acc += sample_trilinear(ctx, vol,
                                ray.origin[0] + t * ray.dir[0],
                                ray.origin[1] + t * ray.dir[1],
                                ray.origin[2] + t * ray.dir[2]);
    }
    return acc * ray.h;
}

void check_volume(const Volume& x, const Geometry& g, const char* op) {
    if (x.dims != g.volume_dims)
        throw std::invalid_argument(std::string(op) + ": volume dimensions do not match geometry");
}

void check_sinogram(const Sinogram& s, const Geometry& g, const char* op) {
    if (s.num_views != g.num_views || s.detector_rows != g.detector_rows ||
        s.detector_cols != g.detector_cols)
        throw std::invalid_argument(std::string(op) + ": sinogram dimensions do not match geometry");
}

}  // namespace

Volume back_project_views(const Sinogram& s, const Geometry& g,
                          const std::vector<int>& views) {
    const ProjectorContext ctx(g);
    Volume out = g.make_volume();
    if (views.empty()) return out;

    const int chunks = std::min<int>(kBackprojChunks, static_cast<int>(views.size()));
    std::vector<std::vector<double>> partial(chunks);
    for (auto& p : partial) p.assign(out.size(), 0.0);

    parallel_chunks(static_cast<std::int64_t>(views.size()), chunks,
                    [&](int chunk, std::int64_t begin, std::int64_t end) {
        std::vector<double>& acc = partial[chunk];
        RaySetup ray;
        for (std::int64_t i = begin; i < end; ++i) {
            const int view = views[i];
            const double angle = g.view_angles[view];
            for (int r = 0; r < g.detector_rows; ++r)
                for (int c = 0; c < g.detector_cols; ++c) {
                    const double sval = s.values[s.index(view, r, c)];
                    if (sval == 0.0) continue;
                    if (!setup_ray(ctx, angle, r, c, ray)) continue;
                    const double contrib = sval * ray.h;
                    for (int k = 0; k < ray.steps; ++k) {
                        const double t = ray.t0 + (k + 0.5) * ray.h;
                        scatter_trilinear(ctx, acc, out.dims,
                                          ray.origin[0] + t * ray.dir[0],
                                          ray.origin[1] + t * ray.dir[1],
                                          ray.origin[2] + t * ray.dir[2], contrib);
                    }
                }
        }
    });

    // Merge in chunk order; deterministic regardless of thread count.
    for (int c = 0; c < chunks; ++c)
        for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] += partial[c][j];
    return out;
}

Sinogram forward_project_views(const Volume& x, const Geometry& g,
                               const std::vector<int>& views) {
    check_volume(x, g, "forward_project");
    const ProjectorContext ctx(g);
    Sinogram out = g.make_sinogram();

    const std::int64_t per_view = static_cast<std::int64_t>(g.detector_rows) * g.detector_cols;
    parallel_for(static_cast<std::int64_t>(views.size()) * per_view,
                 [&](std::int64_t job) {
        const int view = views[static_cast<std::size_t>(job / per_view)];
        const int r = static_cast<int>((job % per_view) / g.detector_cols);
        const int c = static_cast<int>(job % g.detector_cols);
        RaySetup ray;
        if (!setup_ray(ctx, g.view_angles[view], r, c, ray)) return;
        out.values[out.index(view, r, c)] = integrate_ray(ctx, x, ray);
    });
    return out;
}

Sinogram forward_project(const Volume& x, const Geometry& g, const ViewSubset& views) {
    return forward_project_views(x, g, views.indices);
}

Volume back_project(const Sinogram& s, const Geometry& g, const ViewSubset& views) {
    check_sinogram(s, g, "back_project");
    return back_project_views(s, g, views.indices);
}

Volume masked_back_project(const Sinogram& s, const Geometry& g, const ViewSubset& half,
                           const Mask& mask, const TransitionWeights* transition) {
    check_sinogram(s, g, "masked_back_project");
    if (half.kind != ViewSubset::Kind::half)
        throw std::invalid_argument("masked_back_project: subset kind must be half");
    if (mask.dims != g.volume_dims)
        throw std::invalid_argument("masked_back_project: mask dimensions do not match geometry");

    Volume bp_half;
    if (transition != nullptr) {
        Sinogram weighted = s;
        for (int view : half.indices)
            for (int r = 0; r < g.detector_rows; ++r)
                for (int c = 0; c < g.detector_cols; ++c)
                    weighted.values[weighted.index(view, r, c)] *= transition->at(view, c);
        bp_half = back_project_views(weighted, g, half.indices);
    } else {
        bp_half = back_project_views(s, g, half.indices);
    }
    const Volume bp_full = back_project_views(s, g, full_scan_views(g).indices);

    Volume out = g.make_volume();
    for (std::size_t j = 0; j < out.values.size(); ++j) {
        const double m = mask.values[j];
        out.values[j] = m * bp_half.values[j] + (1.0 - m) * bp_full.values[j];
    }
    return out;
}

}  // namespace saw
