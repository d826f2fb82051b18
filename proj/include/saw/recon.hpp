#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saw/geometry.hpp"
#include "saw/regularizer.hpp"
#include "saw/types.hpp"
#include "saw/weights.hpp"

namespace saw {

enum class ReconMode { full_mbir, half_mbir, saw_mbir };
enum class InitMode { zero, fbp };
enum class MaskSource { geometric, file };

struct ReconConfig {
    ReconMode mode = ReconMode::full_mbir;
    int max_iterations = 50;
    bool use_line_search = true;
    double fixed_step = 0.0;  // used when use_line_search is false
    Regularizer regularizer;
    int num_subsets = 1;
    bool nesterov = false;
    InitMode init = InitMode::fbp;
    int half_scan_start = 0;
    MaskSource mask_source = MaskSource::geometric;
    double feather_width = 0.0;  // mm, geometric mask only
    std::string mask_file;
    TransitionMode transition = TransitionMode::binary;
    double convergence_tol = 1e-6;
};

struct ReconReport {
    // Row 0 holds the initial state; rows 1..n one entry per full iteration.
    std::vector<double> cost;
    std::vector<double> step;
    std::vector<double> grad_norm;
    std::vector<double> seconds;
    double final_inner_product = 0.0;  // <g(x), g_s(x)> at the final iterate
    double final_cosine = 0.0;
    int iterations_run = 0;
    bool converged_by_tol = false;
};

struct ReconResult {
    Volume volume;
    ReconReport report;
};

/// Half the weighted sum of squared residuals. The data half of the MAP cost.
double weighted_half_sse(const Sinogram& residual, const Weights& w);

/// MAP cost of the mode's retained data terms plus the regularizer. full and
/// saw modes keep every view; half_mbir restricts residual and W to the half
/// subset (the consistent matched subproblem).
double cost(const Volume& x, const Sinogram& y, const Weights& w, const ReconConfig& cfg,
            const Geometry& g);

/// Exact gradient of cost(): matched back projection of the weighted residual
/// over the mode's views, plus the regularizer gradient.
Volume gradient(const Volume& x, const Sinogram& y, const Weights& w, const ReconConfig& cfg,
                const Geometry& g);

/// SAW descent direction: masked back projection of the full-scan weighted
/// residual plus the regularizer gradient. The residual is always full-scan;
/// only the back projection is masked.
Volume pseudo_gradient(const Volume& x, const Sinogram& y, const Weights& w, const Mask& mask,
                       const ReconConfig& cfg, const Geometry& g);

/// Step size alpha >= 0 with cost(x - alpha*d) <= cost(x). Quadratic
/// potential: the exact 1-D minimizer
///   alpha = <d, g(x)> / (||A d||_W^2 + d^T H_Phi d)
/// via one extra forward projection. Huber: backtracking from the quadratic-
/// surrogate step, at most 20 halvings; 0 if no decrease is found.
double line_search(const Volume& x, const Volume& direction, const Sinogram& y,
                   const Weights& w, const ReconConfig& cfg, const Geometry& g);

/// Runs the configured iteration (Algorithm: x_{k+1} = x_k - alpha * g_s(x_k),
/// with ordered subsets, Nesterov momentum with restart on cost increase, and
/// line search on the combined step). See README for the exact schedule.
ReconResult reconstruct(const Sinogram& y, const Geometry& g, const ReconConfig& cfg,
                        const Weights& w, const Mask* mask_override = nullptr);

}  // namespace saw
