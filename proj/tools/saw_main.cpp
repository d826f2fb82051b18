#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "saw/config.hpp"
#include "saw/pipeline.hpp"
#include "saw/threading.hpp"

namespace {

// Unrecognized --section.key=value arguments become config overrides.
std::vector<std::string> extras_to_overrides(const std::vector<std::string>& extras) {
    std::vector<std::string> overrides;
    for (const auto& e : extras) {
        if (e.rfind("--", 0) == 0 && e.find('=') != std::string::npos &&
            e.find('.') != std::string::npos) {
            overrides.push_back(e.substr(2));
        } else {
            throw saw::ConfigError("unrecognized argument: " + e);
        }
    }
    return overrides;
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("SAW_RECON_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 0;  // hardware concurrency
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"saw-recon: cone-beam CT simulation and spatially-adaptive MBIR"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::string mode = "saw";
    int threads = 0;
    std::string cmp_a, cmp_b, cmp_ref, cmp_csv = "rmse.csv";

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config)
            sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--threads", threads, "worker thread cap (default: hardware)");
        sub->add_option("--output", output_dir, "override [output] dir");
        sub->allow_extras();
    };

    CLI::App* sim = app.add_subcommand("simulate", "simulate sinogram + ground truth");
    add_common(sim, true);
    CLI::App* msk = app.add_subcommand("mask", "compute the half-scan completeness mask");
    add_common(msk, true);
    CLI::App* rec = app.add_subcommand("reconstruct", "run one reconstruction");
    add_common(rec, true);
    rec->add_option("--mode", mode, "full | half | saw")->required();
    CLI::App* cmp = app.add_subcommand("compare", "per-slice RMSE between two volumes");
    cmp->add_option("volume_a", cmp_a)->required();
    cmp->add_option("volume_b", cmp_b)->required();
    cmp->add_option("--reference", cmp_ref, "volume defining the zero-intensity exclusion")
        ->required();
    cmp->add_option("--csv", cmp_csv, "output CSV path");
    cmp->add_option("--threads", threads, "worker thread cap");
    CLI::App* demo = app.add_subcommand("paper-demo",
                                        "simulate, reconstruct all three modes, compare");
    add_common(demo, true);

    CLI11_PARSE(app, argc, argv);

    try {
        saw::set_max_threads(resolve_threads(threads));

        if (cmp->parsed()) {
            saw::cmd_compare(cmp_a, cmp_b, cmp_ref, cmp_csv);
            return 0;
        }

        CLI::App* active = sim->parsed() ? sim : msk->parsed() ? msk : rec->parsed() ? rec : demo;
        std::vector<std::string> overrides = extras_to_overrides(active->remaining());
        if (!output_dir.empty()) overrides.push_back("output.dir=" + output_dir);

        const saw::RunConfig cfg = saw::load_run_config(config_path, overrides);

        if (sim->parsed()) {
            saw::cmd_simulate(cfg);
        } else if (msk->parsed()) {
            saw::cmd_mask(cfg);
        } else if (rec->parsed()) {
            saw::ReconMode m;
            if (mode == "full")
                m = saw::ReconMode::full_mbir;
            else if (mode == "half")
                m = saw::ReconMode::half_mbir;
            else if (mode == "saw")
                m = saw::ReconMode::saw_mbir;
            else
                throw saw::ConfigError("unknown --mode '" + mode + "' (full | half | saw)");
            saw::cmd_reconstruct(cfg, m);
        } else {
            saw::cmd_paper_demo(cfg);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
