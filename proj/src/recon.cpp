#include "saw/recon.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "saw/fbp.hpp"
#include "saw/io.hpp"
#include "saw/projector.hpp"

namespace saw {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

/// Mode-specific operators plus everything resolved once per run.
struct ModeOps {
    const Geometry& g;
    const ReconConfig& cfg;
    const Weights& w;
    const Sinogram& y;

    ViewSubset full;
    ViewSubset half;
    ViewSubset active;               // views participating in the residual
    std::vector<char> active_flag;   // per view
    Mask mask;                       // saw only
    TransitionWeights transition;    // saw only
    bool use_transition = false;

    ModeOps(const Sinogram& y_, const Geometry& g_, const ReconConfig& cfg_, const Weights& w_,
            const Mask* mask_override)
        : g(g_), cfg(cfg_), w(w_), y(y_) {
        if (!w.matches(y))
            throw std::invalid_argument("recon: weights shape does not match sinogram");
        if (y.num_views != g.num_views || y.detector_rows != g.detector_rows ||
            y.detector_cols != g.detector_cols)
            throw std::invalid_argument("recon: sinogram shape does not match geometry");

        full = full_scan_views(g);
        half = half_scan_views(g, cfg.half_scan_start);
        active = (cfg.mode == ReconMode::half_mbir) ? half : full;
        active_flag.assign(g.num_views, 0);
        for (int v : active.indices) active_flag[v] = 1;

        if (cfg.mode == ReconMode::saw_mbir) {
            if (mask_override != nullptr) {
                if (mask_override->dims != g.volume_dims)
                    throw std::invalid_argument("recon: mask dimensions do not match geometry");
                mask = *mask_override;
            } else if (cfg.mask_source == MaskSource::file) {
                mask = mask_from_volume(io::read_volume(cfg.mask_file), g);
            } else {
                mask = compute_mask(g, half, cfg.feather_width);
            }
            if (cfg.transition == TransitionMode::parker) {
                transition = view_transition_weights(g, half, TransitionMode::parker);
                use_transition = true;
            }
        }
    }

    /// (Ax - y) on active views, zero elsewhere.
    Sinogram residual(const Sinogram& ax) const {
        Sinogram r = ax;
        for (int v = 0; v < g.num_views; ++v) {
            const std::size_t base = r.index(v, 0, 0);
            const std::size_t n = static_cast<std::size_t>(g.detector_rows) * g.detector_cols;
            if (active_flag[v]) {
                for (std::size_t i = 0; i < n; ++i) r.values[base + i] -= y.values[base + i];
            } else {
                for (std::size_t i = 0; i < n; ++i) r.values[base + i] = 0.0;
            }
        }
        return r;
    }

    double data_cost(const Sinogram& r) const { return weighted_half_sse(r, w); }

    Sinogram apply_weights(const Sinogram& r) const {
        Sinogram wr = r;
        for (std::size_t i = 0; i < wr.values.size(); ++i) wr.values[i] *= w.values[i];
        return wr;
    }

    /// Blend of half- and full-view back projections through the mask.
    Volume masked_bp(const Sinogram& s, const std::vector<int>& half_views,
                     const std::vector<int>& all_views) const {
        Volume bp_half;
        if (use_transition) {
            Sinogram weighted = s;
            for (int view : half_views)
                for (int r = 0; r < g.detector_rows; ++r)
                    for (int c = 0; c < g.detector_cols; ++c)
                        weighted.values[weighted.index(view, r, c)] *= transition.at(view, c);
            bp_half = back_project_views(weighted, g, half_views);
        } else {
            bp_half = back_project_views(s, g, half_views);
        }
        const Volume bp_full = back_project_views(s, g, all_views);
        Volume out = g.make_volume();
        for (std::size_t j = 0; j < out.values.size(); ++j) {
            const double m = mask.values[j];
            out.values[j] = m * bp_half.values[j] + (1.0 - m) * bp_full.values[j];
        }
        return out;
    }

    /// Descent direction at x given its residual: mode back projection of the
    /// weighted residual plus the regularizer gradient.
    Volume direction(const Sinogram& r, const Volume& x) const {
        const Sinogram wr = apply_weights(r);
        Volume d;
        switch (cfg.mode) {
            case ReconMode::full_mbir:
                d = back_project_views(wr, g, full.indices);
                break;
            case ReconMode::half_mbir:
                d = back_project_views(wr, g, half.indices);
                break;
            case ReconMode::saw_mbir:
                d = masked_bp(wr, half.indices, full.indices);
                break;
        }
        cfg.regularizer.add_gradient(x, d);
        return d;
    }

    /// Subset direction for ordered subsets: scale * BP over the subset's
    /// views (intersected with the half set for the half branch of saw).
    Volume direction_subset(const Sinogram& r_sub, const std::vector<int>& sub,
                            const std::vector<int>& sub_in_half, const Volume& x,
                            double scale) const {
        const Sinogram wr = apply_weights(r_sub);
        Volume d;
        if (cfg.mode == ReconMode::saw_mbir) {
            d = masked_bp(wr, sub_in_half, sub);
        } else {
            d = back_project_views(wr, g, sub);
        }
        for (auto& v : d.values) v *= scale;
        cfg.regularizer.add_gradient(x, d);
        return d;
    }

    Sinogram forward_active(const Volume& x) const { return forward_project(x, g, active); }

    Volume initial_volume() const {
        if (cfg.init == InitMode::zero) return g.make_volume();
        switch (cfg.mode) {
            case ReconMode::full_mbir:
                return fbp_init(y, g, full);
            case ReconMode::half_mbir:
                return fbp_init(y, g, half);
            case ReconMode::saw_mbir: {
                // Spatially matched start: half-scan FBP inside the mask,
                // full-scan FBP outside.
                const Volume fh = fbp_init(y, g, half);
                const Volume ff = fbp_init(y, g, full);
                Volume x0 = g.make_volume();
                for (std::size_t j = 0; j < x0.values.size(); ++j) {
                    const double m = mask.values[j];
                    x0.values[j] = m * fh.values[j] + (1.0 - m) * ff.values[j];
                }
                return x0;
            }
        }
        return g.make_volume();
    }
};

struct LineSearchResult {
    double alpha = 0.0;
    double f_new = 0.0;
    bool evaluated = false;  // f_new valid
};

/// Quadratic-exact / Huber-backtracking line search along -d from z, using
/// the cached residual at z and the forward projection of d. For huber the
/// candidate cost is evaluated exactly; for quadratic it is evaluated from
/// the updated residual (one vector op, no extra projection).
LineSearchResult line_search_cached(const ModeOps& ops, const Volume& z, const Volume& d,
                                    const Sinogram& rz, const Sinogram& ad, double f_z) {
    const auto& w = ops.w.values;
    double num = 0.0, den_data = 0.0;
    for (std::size_t i = 0; i < ad.values.size(); ++i) {
        num += w[i] * ad.values[i] * rz.values[i];
        den_data += w[i] * ad.values[i] * ad.values[i];
    }
    double reg_dot = 0.0;
    if (ops.cfg.regularizer.beta > 0.0) {
        const Volume reg_grad = ops.cfg.regularizer.gradient(z);
        reg_dot = dot(reg_grad.values, d.values);
    }
    num += reg_dot;
    const double den = den_data + ops.cfg.regularizer.curvature(d);

    LineSearchResult res;
    if (!(num > 0.0) || !(den > 0.0)) return res;  // not a descent direction

    double alpha = num / den;
    if (ops.cfg.regularizer.potential == Potential::quadratic ||
        ops.cfg.regularizer.beta == 0.0) {
        res.alpha = alpha;
        return res;  // exact minimizer; caller evaluates f via residual update
    }

    // Huber: the quadratic curvature majorizes, so the surrogate step already
    // decreases the cost; backtrack as a safety net.
    for (int tries = 0; tries < 20; ++tries) {
        Volume xc = z;
        for (std::size_t j = 0; j < xc.values.size(); ++j) xc.values[j] -= alpha * d.values[j];
        Sinogram rc = rz;
        for (std::size_t i = 0; i < rc.values.size(); ++i) rc.values[i] -= alpha * ad.values[i];
        const double fc = ops.data_cost(rc) + ops.cfg.regularizer.cost(xc);
        if (fc <= f_z) {
            res.alpha = alpha;
            res.f_new = fc;
            res.evaluated = true;
            return res;
        }
        alpha *= 0.5;
    }
    return res;  // alpha 0
}

}  // namespace

double weighted_half_sse(const Sinogram& residual, const Weights& w) {
    if (!w.matches(residual))
        throw std::invalid_argument("weighted_half_sse: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < residual.values.size(); ++i)
        acc += w.values[i] * residual.values[i] * residual.values[i];
    return 0.5 * acc;
}

double cost(const Volume& x, const Sinogram& y, const Weights& w, const ReconConfig& cfg,
            const Geometry& g) {
    const ModeOps ops(y, g, cfg, w, nullptr);
    const Sinogram ax = ops.forward_active(x);
    const Sinogram r = ops.residual(ax);
    return ops.data_cost(r) + cfg.regularizer.cost(x);
}

Volume gradient(const Volume& x, const Sinogram& y, const Weights& w, const ReconConfig& cfg,
                const Geometry& g) {
    if (cfg.mode == ReconMode::saw_mbir)
        throw std::invalid_argument("gradient: saw_mbir uses pseudo_gradient");
    const ModeOps ops(y, g, cfg, w, nullptr);
    const Sinogram ax = ops.forward_active(x);
    const Sinogram r = ops.residual(ax);
    return ops.direction(r, x);
}

Volume pseudo_gradient(const Volume& x, const Sinogram& y, const Weights& w, const Mask& mask,
                       const ReconConfig& cfg, const Geometry& g) {
    if (cfg.mode != ReconMode::saw_mbir)
        throw std::invalid_argument("pseudo_gradient: mode must be saw_mbir");
    const ModeOps ops(y, g, cfg, w, &mask);
    const Sinogram ax = ops.forward_active(x);
    const Sinogram r = ops.residual(ax);
    return ops.direction(r, x);
}

double line_search(const Volume& x, const Volume& direction, const Sinogram& y,
                   const Weights& w, const ReconConfig& cfg, const Geometry& g) {
    bool any_nonzero = false;
    for (double v : direction.values) {
        if (!std::isfinite(v))
            throw std::invalid_argument("line_search: direction must be finite");
        if (v != 0.0) any_nonzero = true;
    }
    if (!any_nonzero) throw std::invalid_argument("line_search: direction must be nonzero");

    const ModeOps ops(y, g, cfg, w, nullptr);
    const Sinogram ax = ops.forward_active(x);
    const Sinogram rz = ops.residual(ax);
    const Sinogram ad = ops.forward_active(direction);
    const double f_z = ops.data_cost(rz) + cfg.regularizer.cost(x);
    return line_search_cached(ops, x, direction, rz, ad, f_z).alpha;
}

ReconResult reconstruct(const Sinogram& y, const Geometry& g, const ReconConfig& cfg,
                        const Weights& w, const Mask* mask_override) {
    if (cfg.max_iterations < 1)
        throw std::invalid_argument("recon: max_iterations must be >= 1");
    if (cfg.regularizer.beta < 0.0)
        throw std::invalid_argument("recon: regularizer strength must be >= 0");
    if (cfg.regularizer.potential == Potential::huber && !(cfg.regularizer.huber_delta > 0.0))
        throw std::invalid_argument("recon: huber delta must be > 0");
    if (cfg.num_subsets < 1)
        throw std::invalid_argument("recon: num_subsets must be >= 1");
    if (g.num_views % cfg.num_subsets != 0)
        throw std::invalid_argument("recon: num_subsets must divide num_views evenly");

    const ModeOps ops(y, g, cfg, w, mask_override);

    const int S = cfg.num_subsets;
    const int active_count = static_cast<int>(ops.active.indices.size());
    if (active_count % S != 0)
        throw std::invalid_argument(
            "recon: num_subsets must divide the mode's view count (" +
            std::to_string(active_count) + ")");

    // View-interleaved subsets of the active views, plus their half-subset
    // intersections for saw.
    std::vector<std::vector<int>> subsets(S), subsets_in_half(S);
    {
        std::vector<char> in_half(g.num_views, 0);
        for (int v : ops.half.indices) in_half[v] = 1;
        for (int j = 0; j < active_count; ++j) {
            const int v = ops.active.indices[j];
            subsets[j % S].push_back(v);
            if (in_half[v]) subsets_in_half[j % S].push_back(v);
        }
    }

    Volume x = ops.initial_volume();
    Sinogram ax = ops.forward_active(x);
    Sinogram r = ops.residual(ax);
    double f = ops.data_cost(r) + cfg.regularizer.cost(x);
    if (!std::isfinite(f)) throw std::runtime_error("recon: non-finite initial cost");

    ReconReport report;
    report.cost.push_back(f);
    report.step.push_back(0.0);
    report.grad_norm.push_back(0.0);
    report.seconds.push_back(0.0);

    Volume x_prev = x;
    Sinogram ax_prev = ax;
    bool have_prev = false;
    double t_momentum = 1.0;
    double alpha_sub = 0.0;

    const auto advance_t = [](double t) {
        return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    };

    for (int k = 1; k <= cfg.max_iterations; ++k) {
        const auto tic = std::chrono::steady_clock::now();

        bool with_momentum = cfg.nesterov && have_prev && t_momentum > 1.0;
        bool subsets_allowed = true;
        bool restarted = false;
        bool used_os = false;
        double alpha = 0.0, f_new = f, dir_norm = 0.0;
        Volume x_new;
        Sinogram ax_new, r_new;

        for (;;) {
            Volume z = x;
            Sinogram az = ax;
            if (with_momentum) {
                const double mu = (t_momentum - 1.0) / advance_t(t_momentum);
                for (std::size_t j = 0; j < z.values.size(); ++j)
                    z.values[j] += mu * (x.values[j] - x_prev.values[j]);
                for (std::size_t i = 0; i < az.values.size(); ++i)
                    az.values[i] += mu * (ax.values[i] - ax_prev.values[i]);
            }
            const Sinogram rz = ops.residual(az);

            Volume d;
            const bool os_pass = subsets_allowed && S > 1 && alpha_sub > 0.0;
            used_os = os_pass;
            if (!os_pass) {
                d = ops.direction(rz, z);
            } else {
                Volume u = z;
                for (int s = 0; s < S; ++s) {
                    const Sinogram au_sub = forward_project_views(u, g, subsets[s]);
                    Sinogram r_sub = au_sub;
                    for (int v : subsets[s]) {
                        const std::size_t base = r_sub.index(v, 0, 0);
                        const std::size_t n =
                            static_cast<std::size_t>(g.detector_rows) * g.detector_cols;
                        for (std::size_t i = 0; i < n; ++i)
                            r_sub.values[base + i] -= y.values[base + i];
                    }
                    const Volume ds = ops.direction_subset(r_sub, subsets[s], subsets_in_half[s],
                                                           u, static_cast<double>(S));
                    for (std::size_t j = 0; j < u.values.size(); ++j)
                        u.values[j] -= alpha_sub * ds.values[j];
                }
                d = z;  // combined step direction z - u; expected alpha near 1
                for (std::size_t j = 0; j < d.values.size(); ++j) d.values[j] -= u.values[j];
            }
            dir_norm = norm2(d.values);

            const Sinogram ad = ops.forward_active(d);

            double f_z = f;
            if (cfg.regularizer.potential == Potential::huber && cfg.regularizer.beta > 0.0)
                f_z = ops.data_cost(rz) + cfg.regularizer.cost(z);

            if (cfg.use_line_search) {
                const LineSearchResult ls = line_search_cached(ops, z, d, rz, ad, f_z);
                alpha = ls.alpha;
                if (alpha == 0.0) {
                    // No descent along this direction. Retry without momentum
                    // first, then without subsets, before declaring a stall.
                    if (with_momentum) {
                        with_momentum = false;
                        restarted = true;
                        continue;
                    }
                    if (os_pass) {
                        subsets_allowed = false;
                        alpha_sub *= 0.5;
                        continue;
                    }
                    x_new = x;
                    ax_new = ax;
                    r_new = r;
                    f_new = f;
                    break;
                }
            } else {
                alpha = cfg.fixed_step;
            }

            x_new = z;
            for (std::size_t j = 0; j < x_new.values.size(); ++j)
                x_new.values[j] -= alpha * d.values[j];
            ax_new = az;
            for (std::size_t i = 0; i < ax_new.values.size(); ++i)
                ax_new.values[i] -= alpha * ad.values[i];
            r_new = rz;
            for (std::size_t i = 0; i < r_new.values.size(); ++i)
                r_new.values[i] -= alpha * ad.values[i];
            f_new = ops.data_cost(r_new) + cfg.regularizer.cost(x_new);
            if (!std::isfinite(f_new))
                throw std::runtime_error("recon: non-finite cost at iteration " +
                                         std::to_string(k));

            if (!cfg.use_line_search || f_new <= f) break;

            if (with_momentum) {
                // Cost increased on the extrapolated step: roll back and
                // restart the momentum sequence from the current iterate.
                with_momentum = false;
                restarted = true;
                continue;
            }
            if (os_pass) {
                // The combined subset direction stopped descending; fall back
                // to the plain gradient for this iteration and take smaller
                // sub-steps from now on.
                subsets_allowed = false;
                alpha_sub *= 0.5;
                continue;
            }
            // No decrease along the direction: keep the iterate (stall).
            alpha = 0.0;
            x_new = x;
            ax_new = ax;
            r_new = r;
            f_new = f;
            break;
        }

        x_prev = std::move(x);
        ax_prev = std::move(ax);
        x = std::move(x_new);
        ax = std::move(ax_new);
        r = std::move(r_new);
        have_prev = true;
        if (cfg.nesterov)
            t_momentum = (restarted || alpha <= 0.0) ? 1.0 : advance_t(t_momentum);

        if (alpha > 0.0) {
            if (alpha_sub <= 0.0)
                alpha_sub = alpha;  // bootstrap sub-steps from the first plain step
            else if (used_os)
                alpha_sub *= alpha;  // combined linesearch rescales the sub-step
        }

        const double f_old = f;
        f = f_new;
        const auto toc = std::chrono::steady_clock::now();
        report.cost.push_back(f);
        report.step.push_back(alpha);
        report.grad_norm.push_back(dir_norm);
        report.seconds.push_back(std::chrono::duration<double>(toc - tic).count());
        report.iterations_run = k;

        const double rel_change = std::abs(f_old - f) / std::max(std::abs(f_old), 1e-300);
        if (rel_change < cfg.convergence_tol) {
            report.converged_by_tol = true;
            break;
        }
    }

    // Fixed-point diagnostic: inner product between the true gradient and the
    // direction actually iterated (they coincide except in saw mode).
    {
        const Volume g_s = ops.direction(r, x);
        Volume g_true;
        if (cfg.mode == ReconMode::saw_mbir) {
            Sinogram wr = ops.apply_weights(r);
            g_true = back_project_views(wr, g, ops.full.indices);
            cfg.regularizer.add_gradient(x, g_true);
        } else {
            g_true = g_s;
        }
        report.final_inner_product = dot(g_true.values, g_s.values);
        const double denom = norm2(g_true.values) * norm2(g_s.values);
        report.final_cosine = denom > 0.0 ? report.final_inner_product / denom : 0.0;
    }

    return {std::move(x), std::move(report)};
}

}  // namespace saw
