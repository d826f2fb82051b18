#include "saw/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "saw/io.hpp"
#include "saw/phantom.hpp"
#include "saw/projector.hpp"
#include "saw/threading.hpp"

namespace saw {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

fs::path outdir(const RunConfig& cfg) {
    fs::path dir(cfg.output.dir);
    fs::create_directories(dir);
    return dir;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_manifest(const RunConfig& cfg, const std::string& command) {
    write_text(outdir(cfg) / ("manifest_" + command + ".txt"),
               render_manifest(cfg, command, max_threads()));
}

Volume mask_to_volume(const Mask& m, const Geometry& g) {
    Volume v(g.volume_dims, g.voxel_size);
    v.values = m.values;
    return v;
}

}  // namespace

double half_scan_center_phase(const Geometry& g, int half_scan_start) {
    const ViewSubset half = half_scan_views(g, half_scan_start);
    const double center_view =
        half_scan_start + (static_cast<double>(half.indices.size()) - 1.0) / 2.0;
    return center_view / g.num_views;
}

RoiBox insert_roi(const Ellipsoid& insert, const Geometry& g, int half_scan_start) {
    // Centered on the reference-phase position and wide enough that any
    // phase's position (plus the insert itself) stays inside; confined to the
    // center slices so the background pedestal cannot dominate the
    // min-subtracted centroid.
    const double t_ref = half_scan_center_phase(g, half_scan_start);
    const auto off_ref = insert.motion.offset(t_ref);
    double reach[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i <= 16; ++i) {
        const auto off = insert.motion.offset(i / 16.0);
        for (int a = 0; a < 3; ++a)
            reach[a] = std::max(reach[a], std::abs(off[a] - off_ref[a]));
    }
    const double margin = 4.0;
    auto clampi = [](int v, int lo, int hi) { return std::min(std::max(v, lo), hi); };
    RoiBox roi;
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
        const double center = insert.center[a] + off_ref[a];
        // axially a thin slab through the insert equator, so the background
        // cannot outweigh the insert in the min-subtracted centroid
        const double half_extent =
            (a == 2) ? reach[2] + 0.5 * insert.semi_axes[2] : reach[a] + insert.semi_axes[a] + margin;
        lo[a] = clampi(static_cast<int>(std::round((center - half_extent) / g.voxel_size[a] +
                                                   (g.volume_dims[a] - 1) / 2.0)),
                       0, g.volume_dims[a] - 1);
        hi[a] = clampi(static_cast<int>(std::round((center + half_extent) / g.voxel_size[a] +
                                                   (g.volume_dims[a] - 1) / 2.0)),
                       0, g.volume_dims[a] - 1);
    }
    roi.x0 = lo[0];
    roi.x1 = hi[0];
    roi.y0 = lo[1];
    roi.y1 = hi[1];
    roi.z0 = lo[2];
    roi.z1 = hi[2];
    return roi;
}

std::string recon_mode_name(ReconMode mode) {
    switch (mode) {
        case ReconMode::full_mbir:
            return "full";
        case ReconMode::half_mbir:
            return "half";
        case ReconMode::saw_mbir:
            return "saw";
    }
    return "full";
}

fs::path recon_output_path(const RunConfig& cfg, ReconMode mode) {
    return fs::path(cfg.output.dir) / ("recon_" + recon_mode_name(mode) + ".sawv");
}

fs::path report_output_path(const RunConfig& cfg, ReconMode mode) {
    return fs::path(cfg.output.dir) / ("report_" + recon_mode_name(mode) + ".csv");
}

void cmd_simulate(const RunConfig& cfg) {
    const Geometry g = make_geometry(cfg.geometry);
    if (cfg.phantom.ellipsoids.empty())
        throw std::runtime_error("simulate: config defines no [ellipsoid] sections");

    const fs::path dir = outdir(cfg);
    const Sinogram y = simulate_sinogram(
        cfg.phantom, g,
        cfg.acquisition.noise ? std::optional<double>(cfg.acquisition.photons_i0) : std::nullopt,
        cfg.acquisition.seed);
    io::write_sinogram(y, dir / cfg.output.sinogram_file);

    const double t_ref = half_scan_center_phase(g, cfg.recon.half_scan_start);
    const Volume truth = rasterize(cfg.phantom, t_ref, g);
    io::write_volume(truth, dir / cfg.output.ground_truth_file);

    write_manifest(cfg, "simulate");
}

void cmd_mask(const RunConfig& cfg) {
    const Geometry g = make_geometry(cfg.geometry);
    const ViewSubset half = half_scan_views(g, cfg.recon.half_scan_start);
    const Mask m = compute_mask(g, half, cfg.recon.feather_width);

    const fs::path dir = outdir(cfg);
    io::write_volume(mask_to_volume(m, g), dir / cfg.output.mask_file);

    std::string csv = "slice_index,area_voxels\n";
    for (int iz = 0; iz < g.volume_dims[2]; ++iz) {
        double area = 0.0;
        for (int iy = 0; iy < g.volume_dims[1]; ++iy)
            for (int ix = 0; ix < g.volume_dims[0]; ++ix) area += m.at(ix, iy, iz);
        csv += std::to_string(iz) + "," + fmt(area) + "\n";
    }
    write_text(dir / "mask_area.csv", csv);
    write_manifest(cfg, "mask");
}

ReconReport cmd_reconstruct(const RunConfig& cfg, ReconMode mode) {
    const Geometry g = make_geometry(cfg.geometry);
    const fs::path dir = outdir(cfg);
    const fs::path sino_path = dir / cfg.output.sinogram_file;
    if (!fs::exists(sino_path))
        throw std::runtime_error("reconstruct: missing sinogram file " + sino_path.string() +
                                 " (run simulate first)");
    const Sinogram y = io::read_sinogram(sino_path);

    ReconConfig rc = cfg.recon;
    rc.mode = mode;
    if (rc.mask_source == MaskSource::file) {
        if (!fs::path(rc.mask_file).is_absolute()) rc.mask_file = (dir / rc.mask_file).string();
        if (mode == ReconMode::saw_mbir && !fs::exists(rc.mask_file))
            throw std::runtime_error("reconstruct: missing mask file " + rc.mask_file);
    }

    const Weights w = statistical_weights(y, cfg.weights_model);
    ReconResult res = reconstruct(y, g, rc, w);

    io::write_volume(res.volume, recon_output_path(cfg, mode));

    std::string csv = "iteration,cost,step,grad_norm,seconds\n";
    for (std::size_t k = 0; k < res.report.cost.size(); ++k) {
        csv += std::to_string(k) + "," + fmt(res.report.cost[k]) + "," +
               fmt(res.report.step[k]) + "," + fmt(res.report.grad_norm[k]) + "," +
               fmt(res.report.seconds[k]) + "\n";
    }
    write_text(report_output_path(cfg, mode), csv);
    write_manifest(cfg, "reconstruct_" + recon_mode_name(mode));

    std::cout << "reconstruct " << recon_mode_name(mode) << ": iterations "
              << res.report.iterations_run << ", final cost "
              << fmt(res.report.cost.back()) << ", <g, g_s> "
              << fmt(res.report.final_inner_product) << " (cosine "
              << fmt(res.report.final_cosine) << ")\n";
    return res.report;
}

CompareSummary cmd_compare(const fs::path& volume_a, const fs::path& volume_b,
                           const fs::path& reference, const fs::path& out_csv) {
    const Volume a = io::read_volume(volume_a);
    const Volume b = io::read_volume(volume_b);
    const Volume ref = io::read_volume(reference);
    const SliceRmseProfile prof = per_slice_rmse(a, b, ref);

    std::string csv = "slice_index,rmse\n";
    for (std::size_t iz = 0; iz < prof.rmse.size(); ++iz)
        csv += std::to_string(iz) + "," + fmt(prof.rmse[iz]) + "\n";
    write_text(out_csv, csv);

    const int nz = static_cast<int>(prof.rmse.size());
    const int sixth = nz / 6, third = nz / 3;
    auto band_mean = [&](auto&& in_band) {
        double acc = 0.0;
        int count = 0;
        for (int iz = 0; iz < nz; ++iz) {
            if (!in_band(iz) || prof.slice_excluded[iz]) continue;
            acc += prof.rmse[iz];
            ++count;
        }
        return count > 0 ? acc / count : 0.0;
    };
    CompareSummary s;
    s.mean_center_third = band_mean([&](int iz) { return iz >= third && iz < nz - third; });
    s.mean_edge_sixths = band_mean([&](int iz) { return iz < sixth || iz >= nz - sixth; });

    std::cout << "compare " << volume_a.filename().string() << " vs "
              << volume_b.filename().string() << ": mean rmse center third "
              << fmt(s.mean_center_third) << ", edge sixths " << fmt(s.mean_edge_sixths)
              << "\n";
    return s;
}

void cmd_paper_demo(const RunConfig& cfg) {
    const fs::path dir = outdir(cfg);
    cmd_simulate(cfg);
    cmd_mask(cfg);

    ReconReport rep_full = cmd_reconstruct(cfg, ReconMode::full_mbir);
    ReconReport rep_half = cmd_reconstruct(cfg, ReconMode::half_mbir);
    ReconReport rep_saw = cmd_reconstruct(cfg, ReconMode::saw_mbir);

    const fs::path truth = dir / cfg.output.ground_truth_file;
    const CompareSummary full_vs_saw =
        cmd_compare(recon_output_path(cfg, ReconMode::full_mbir),
                    recon_output_path(cfg, ReconMode::saw_mbir), truth,
                    dir / "rmse_full_vs_saw.csv");
    const CompareSummary half_vs_saw =
        cmd_compare(recon_output_path(cfg, ReconMode::half_mbir),
                    recon_output_path(cfg, ReconMode::saw_mbir), truth,
                    dir / "rmse_half_vs_saw.csv");
    const CompareSummary half_vs_full =
        cmd_compare(recon_output_path(cfg, ReconMode::half_mbir),
                    recon_output_path(cfg, ReconMode::full_mbir), truth,
                    dir / "rmse_half_vs_full.csv");

    // Temporal-resolution table for the first moving ellipsoid, if any.
    std::string insert_block;
    const Geometry g = make_geometry(cfg.geometry);
    const Ellipsoid* insert = nullptr;
    for (const auto& e : cfg.phantom.ellipsoids)
        if (e.motion.kind != Motion::Kind::static_) insert = &e;
    if (insert != nullptr) {
        const RoiBox roi = insert_roi(*insert, g, cfg.recon.half_scan_start);
        const Volume truth_vol = io::read_volume(truth);
        const InsertMetrics m_ref = insert_centroid_and_width(truth_vol, roi);
        insert_block += "insert reference centroid_mm = " + fmt(m_ref.centroid_mm[0]) + " " +
                        fmt(m_ref.centroid_mm[1]) + " " + fmt(m_ref.centroid_mm[2]) +
                        ", fwhm_mm = " + fmt(m_ref.fwhm_mm[0]) + " " + fmt(m_ref.fwhm_mm[1]) +
                        " " + fmt(m_ref.fwhm_mm[2]) + "\n";
        for (ReconMode mode :
             {ReconMode::full_mbir, ReconMode::half_mbir, ReconMode::saw_mbir}) {
            const Volume rec = io::read_volume(recon_output_path(cfg, mode));
            const InsertMetrics m = insert_centroid_and_width(rec, roi);
            const double err = std::sqrt(
                std::pow(m.centroid_mm[0] - m_ref.centroid_mm[0], 2) +
                std::pow(m.centroid_mm[1] - m_ref.centroid_mm[1], 2) +
                std::pow(m.centroid_mm[2] - m_ref.centroid_mm[2], 2));
            insert_block += "insert " + recon_mode_name(mode) + " centroid_error_mm = " +
                            fmt(err) + ", fwhm_mm = " + fmt(m.fwhm_mm[0]) + " " +
                            fmt(m.fwhm_mm[1]) + " " + fmt(m.fwhm_mm[2]) + "\n";
        }
    }

    std::string summary;
    summary += "rmse_vs_saw edge_sixths: full = " + fmt(full_vs_saw.mean_edge_sixths) +
               ", half = " + fmt(half_vs_saw.mean_edge_sixths) + "\n";
    summary += "rmse_vs_saw center_third: full = " + fmt(full_vs_saw.mean_center_third) +
               ", half = " + fmt(half_vs_saw.mean_center_third) + "\n";
    summary += "rmse_half_vs_full center_third = " + fmt(half_vs_full.mean_center_third) +
               ", edge_sixths = " + fmt(half_vs_full.mean_edge_sixths) + "\n";
    summary += "final_cost: full = " + fmt(rep_full.cost.back()) +
               ", half = " + fmt(rep_half.cost.back()) + ", saw = " + fmt(rep_saw.cost.back()) +
               "\n";
    summary += "saw fixed-point diagnostic <g, g_s> = " + fmt(rep_saw.final_inner_product) +
               " (cosine " + fmt(rep_saw.final_cosine) + ")\n";
    summary += insert_block;
    write_text(dir / "demo_summary.txt", summary);
    std::cout << summary;
}

}  // namespace saw
