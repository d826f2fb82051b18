#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "saw/geometry.hpp"
#include "saw/phantom.hpp"
#include "saw/recon.hpp"
#include "saw/weights.hpp"

namespace saw {

struct AcquisitionConfig {
    bool noise = false;
    double photons_i0 = 1e5;
    std::uint64_t seed = 1;
};

struct OutputConfig {
    std::string dir = "out";
    std::string sinogram_file = "sinogram.saws";
    std::string ground_truth_file = "ground_truth.sawv";
    std::string mask_file = "mask.sawv";
};

/// One config file drives the whole pipeline: geometry, phantom, acquisition,
/// recon, output. Sections are [geometry], [ellipsoid] (repeatable),
/// [acquisition], [recon], [output]; unknown sections or keys are rejected.
struct RunConfig {
    GeometryConfig geometry;
    PhantomSpec phantom;
    AcquisitionConfig acquisition;
    ReconConfig recon;
    NoiseModel weights_model = NoiseModel::photon;
    OutputConfig output;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses key = value sections from `text`. Overrides are "section.key=value"
/// strings applied on top (repeatable [ellipsoid] sections cannot be
/// overridden this way).
RunConfig parse_run_config(const std::string& text,
                           const std::vector<std::string>& overrides = {});

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

/// Canonical text of the fully resolved configuration; writing it back and
/// re-running reproduces the outputs bit-exactly. No timestamps.
std::string render_manifest(const RunConfig& cfg, const std::string& command, int threads);

}  // namespace saw
