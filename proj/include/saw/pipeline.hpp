#pragma once

#include <filesystem>
#include <string>

#include "saw/config.hpp"
#include "saw/metrics.hpp"
#include "saw/recon.hpp"

namespace saw {

/// Scan phase of the center of the half-scan span; the reference phase for
/// ground truth and temporal metrics.
double half_scan_center_phase(const Geometry& g, int half_scan_start);

/// Center-slice ROI around a moving insert: centered on its reference-phase
/// position, wide enough to hold every phase's position.
RoiBox insert_roi(const Ellipsoid& insert, const Geometry& g, int half_scan_start);

struct CompareSummary {
    double mean_center_third = 0.0;
    double mean_edge_sixths = 0.0;
};

/// Writes the sinogram, the ground-truth volume at the half-scan-center
/// phase, and the run manifest.
void cmd_simulate(const RunConfig& cfg);

/// Writes the half-scan completeness mask and a per-slice mask-area CSV.
void cmd_mask(const RunConfig& cfg);

/// Reads the simulated sinogram and writes recon_<mode>.sawv plus the
/// per-iteration report CSV. Returns the report.
ReconReport cmd_reconstruct(const RunConfig& cfg, ReconMode mode);

/// Per-slice RMSE of a vs b with zero-intensity exclusion against
/// `reference`; writes the CSV and returns band means (excluded slices are
/// skipped in the means).
CompareSummary cmd_compare(const std::filesystem::path& volume_a,
                           const std::filesystem::path& volume_b,
                           const std::filesystem::path& reference,
                           const std::filesystem::path& out_csv);

/// The whole experiment from one config: simulate, mask, the three
/// reconstructions, pairwise comparisons, and a summary table.
void cmd_paper_demo(const RunConfig& cfg);

std::string recon_mode_name(ReconMode mode);

std::filesystem::path recon_output_path(const RunConfig& cfg, ReconMode mode);
std::filesystem::path report_output_path(const RunConfig& cfg, ReconMode mode);

}  // namespace saw
