#include "saw/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace saw {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct RawSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
};

std::vector<RawSection> tokenize(const std::string& text) {
    std::vector<RawSection> sections;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (sections.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        sections.back().entries.emplace_back(trim(line.substr(0, eq)),
                                             trim(line.substr(eq + 1)));
    }
    return sections;
}

/// Typed accessor over one section that tracks which keys were consumed, so
/// leftovers can be rejected by name.
class SectionReader {
public:
    SectionReader(const RawSection& raw) : name_(raw.name) {
        for (const auto& [k, v] : raw.entries) {
            if (!entries_.emplace(k, v).second)
                throw ConfigError("[" + name_ + "]: duplicate key '" + k + "'");
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        consumed_.insert(key);
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) {
        consumed_.insert(key);
        auto it = entries_.find(key);
        if (it == entries_.end())
            throw ConfigError("[" + name_ + "]: missing required key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key, double fallback) {
        return has(key) ? parse_double(key, require_string(key)) : (consumed_.insert(key), fallback);
    }
    double require_double(const std::string& key) { return parse_double(key, require_string(key)); }

    int get_int(const std::string& key, int fallback) {
        return has(key) ? parse_int(key, require_string(key)) : (consumed_.insert(key), fallback);
    }
    int require_int(const std::string& key) { return parse_int(key, require_string(key)); }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) {
            consumed_.insert(key);
            return fallback;
        }
        const std::string v = require_string(key);
        std::uint64_t out = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size())
            throw ConfigError("[" + name_ + "]: key '" + key + "' is not an unsigned integer: " + v);
        return out;
    }

    bool get_bool(const std::string& key, bool fallback) {
        if (!has(key)) {
            consumed_.insert(key);
            return fallback;
        }
        const std::string v = require_string(key);
        if (v == "on" || v == "true" || v == "1") return true;
        if (v == "off" || v == "false" || v == "0") return false;
        throw ConfigError("[" + name_ + "]: key '" + key + "' must be on/off: " + v);
    }

    std::vector<double> require_doubles(const std::string& key, std::size_t count) {
        const std::string v = require_string(key);
        std::istringstream in(v);
        std::vector<double> out;
        std::string tok;
        while (in >> tok) out.push_back(parse_double(key, tok));
        if (out.size() != count)
            throw ConfigError("[" + name_ + "]: key '" + key + "' needs " +
                              std::to_string(count) + " numbers, got " +
                              std::to_string(out.size()));
        return out;
    }

    /// Whitespace-separated tokens of the raw value.
    std::vector<std::string> tokens(const std::string& key) {
        std::istringstream in(require_string(key));
        std::vector<std::string> out;
        std::string tok;
        while (in >> tok) out.push_back(tok);
        return out;
    }

    void reject_unconsumed() const {
        for (const auto& [k, v] : entries_)
            if (consumed_.count(k) == 0)
                throw ConfigError("[" + name_ + "]: unknown key '" + k + "'");
    }

    const std::string& section_name() const { return name_; }

    double parse_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t idx = 0;
            const double d = std::stod(v, &idx);
            if (idx != v.size()) throw std::invalid_argument("trailing characters");
            if (!std::isfinite(d)) throw std::invalid_argument("not finite");
            return d;
        } catch (const std::exception&) {
            throw ConfigError("[" + name_ + "]: key '" + key + "' is not a number: " + v);
        }
    }

    int parse_int(const std::string& key, const std::string& v) const {
        int out = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size())
            throw ConfigError("[" + name_ + "]: key '" + key + "' is not an integer: " + v);
        return out;
    }

private:
    std::string name_;
    std::map<std::string, std::string> entries_;
    std::set<std::string> consumed_;
};

Ellipsoid bind_ellipsoid(SectionReader& sec) {
    Ellipsoid e;
    const auto c = sec.require_doubles("center_mm", 3);
    e.center = {c[0], c[1], c[2]};
    const auto s = sec.require_doubles("semi_axes_mm", 3);
    e.semi_axes = {s[0], s[1], s[2]};
    e.rotation_z = sec.get_double("rotation_rad", 0.0);
    e.density = sec.require_double("density");

    const std::string motion = sec.get_string("motion", "static");
    std::istringstream in(motion);
    std::string kind;
    in >> kind;
    auto rest = [&](std::size_t count, const char* what) {
        std::vector<double> vals;
        std::string tok;
        while (in >> tok) vals.push_back(sec.parse_double("motion", tok));
        if (vals.size() != count)
            throw ConfigError("[ellipsoid]: motion '" + std::string(what) + "' needs " +
                              std::to_string(count) + " numbers");
        return vals;
    };
    if (kind == "static") {
        rest(0, "static");
        e.motion.kind = Motion::Kind::static_;
    } else if (kind == "drift") {
        const auto v = rest(3, "drift");
        e.motion.kind = Motion::Kind::linear_drift;
        e.motion.velocity = {v[0], v[1], v[2]};
    } else if (kind == "oscillation") {
        const auto v = rest(5, "oscillation");
        e.motion.kind = Motion::Kind::oscillation;
        e.motion.amplitude = {v[0], v[1], v[2]};
        e.motion.period = v[3];
        e.motion.phase = v[4];
    } else {
        throw ConfigError("[ellipsoid]: unknown motion kind '" + kind + "'");
    }
    sec.reject_unconsumed();
    return e;
}

void bind_geometry(SectionReader& sec, GeometryConfig& g) {
    g.source_to_iso_mm = sec.require_double("source_to_iso_mm");
    g.source_to_detector_mm = sec.require_double("source_to_detector_mm");
    g.detector_cols = sec.require_int("detector_cols");
    g.detector_rows = sec.require_int("detector_rows");
    g.detector_col_spacing_mm = sec.require_double("detector_col_spacing_mm");
    g.detector_row_spacing_mm = sec.require_double("detector_row_spacing_mm");
    g.num_views = sec.require_int("num_views");
    g.first_angle_rad = sec.get_double("first_angle_rad", 0.0);
    g.volume_dims = {sec.require_int("volume_nx"), sec.require_int("volume_ny"),
                     sec.require_int("volume_nz")};
    g.voxel_size_mm = {sec.require_double("voxel_dx_mm"), sec.require_double("voxel_dy_mm"),
                       sec.require_double("voxel_dz_mm")};
    sec.reject_unconsumed();
}

void bind_acquisition(SectionReader& sec, AcquisitionConfig& a) {
    a.noise = sec.get_bool("noise", false);
    a.photons_i0 = sec.get_double("photons_i0", 1e5);
    a.seed = sec.get_u64("seed", 1);
    sec.reject_unconsumed();
}

void bind_recon(SectionReader& sec, ReconConfig& r, NoiseModel& weights_model) {
    r.max_iterations = sec.get_int("max_iterations", 50);

    const std::string step = sec.get_string("step_size", "line_search");
    if (step == "line_search") {
        r.use_line_search = true;
        r.fixed_step = 0.0;
    } else {
        r.use_line_search = false;
        r.fixed_step = sec.parse_double("step_size", step);
    }

    r.regularizer.beta = sec.get_double("beta", 0.0);
    const std::string pot = sec.get_string("potential", "quadratic");
    if (pot == "quadratic")
        r.regularizer.potential = Potential::quadratic;
    else if (pot == "huber")
        r.regularizer.potential = Potential::huber;
    else
        throw ConfigError("[recon]: unknown potential '" + pot + "'");
    r.regularizer.huber_delta = sec.get_double("huber_delta", 0.001);
    if (r.regularizer.potential == Potential::huber && !(r.regularizer.huber_delta > 0.0))
        throw ConfigError("[recon]: huber_delta must be > 0");

    r.num_subsets = sec.get_int("num_subsets", 1);
    r.nesterov = sec.get_bool("nesterov", false);

    const std::string init = sec.get_string("init", "fbp");
    if (init == "zero")
        r.init = InitMode::zero;
    else if (init == "fbp")
        r.init = InitMode::fbp;
    else
        throw ConfigError("[recon]: unknown init '" + init + "'");

    r.half_scan_start = sec.get_int("half_scan_start", 0);

    const std::string mask = sec.get_string("mask", "geometric");
    if (mask == "geometric")
        r.mask_source = MaskSource::geometric;
    else if (mask == "file")
        r.mask_source = MaskSource::file;
    else
        throw ConfigError("[recon]: unknown mask source '" + mask + "'");
    r.feather_width = sec.get_double("feather_mm", 0.0);
    r.mask_file = sec.get_string("mask_file", "");
    if (r.mask_source == MaskSource::file && r.mask_file.empty())
        throw ConfigError("[recon]: mask = file requires mask_file");

    const std::string trans = sec.get_string("transition", "binary");
    if (trans == "binary")
        r.transition = TransitionMode::binary;
    else if (trans == "parker")
        r.transition = TransitionMode::parker;
    else
        throw ConfigError("[recon]: unknown transition '" + trans + "'");

    const std::string wm = sec.get_string("weights", "photon");
    if (wm == "uniform")
        weights_model = NoiseModel::uniform;
    else if (wm == "photon")
        weights_model = NoiseModel::photon;
    else
        throw ConfigError("[recon]: unknown weights model '" + wm + "'");

    r.convergence_tol = sec.get_double("convergence_tol", 1e-6);
    sec.reject_unconsumed();
}

void bind_output(SectionReader& sec, OutputConfig& o) {
    o.dir = sec.get_string("dir", o.dir);
    o.sinogram_file = sec.get_string("sinogram_file", o.sinogram_file);
    o.ground_truth_file = sec.get_string("ground_truth_file", o.ground_truth_file);
    o.mask_file = sec.get_string("mask_file", o.mask_file);
    sec.reject_unconsumed();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::vector<std::string>& overrides) {
    auto sections = tokenize(text);

    for (const std::string& ov : overrides) {
        const std::size_t eq = ov.find('=');
        const std::size_t dotpos = ov.find('.');
        if (eq == std::string::npos || dotpos == std::string::npos || dotpos > eq)
            throw ConfigError("override must look like section.key=value: " + ov);
        const std::string section = trim(ov.substr(0, dotpos));
        const std::string key = trim(ov.substr(dotpos + 1, eq - dotpos - 1));
        const std::string value = trim(ov.substr(eq + 1));
        if (section == "ellipsoid")
            throw ConfigError("overrides cannot target repeatable [ellipsoid] sections");
        bool found = false;
        for (auto& raw : sections) {
            if (raw.name != section) continue;
            found = true;
            bool replaced = false;
            for (auto& [k, v] : raw.entries)
                if (k == key) {
                    v = value;
                    replaced = true;
                }
            if (!replaced) raw.entries.emplace_back(key, value);
        }
        if (!found) sections.push_back({section, {{key, value}}});
    }

    RunConfig cfg;
    std::set<std::string> seen;
    bool have_geometry = false;
    for (const auto& raw : sections) {
        if (raw.name == "ellipsoid") {
            SectionReader sec(raw);
            cfg.phantom.ellipsoids.push_back(bind_ellipsoid(sec));
            continue;
        }
        if (!seen.insert(raw.name).second)
            throw ConfigError("duplicate section [" + raw.name + "]");
        SectionReader sec(raw);
        if (raw.name == "geometry") {
            bind_geometry(sec, cfg.geometry);
            have_geometry = true;
        } else if (raw.name == "acquisition") {
            bind_acquisition(sec, cfg.acquisition);
        } else if (raw.name == "recon") {
            bind_recon(sec, cfg.recon, cfg.weights_model);
        } else if (raw.name == "output") {
            bind_output(sec, cfg.output);
        } else {
            throw ConfigError("unknown section [" + raw.name + "]");
        }
    }
    if (!have_geometry) throw ConfigError("missing required section [geometry]");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_run_config(buf.str(), overrides);
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* motion_name(Motion::Kind k) {
    switch (k) {
        case Motion::Kind::static_:
            return "static";
        case Motion::Kind::linear_drift:
            return "drift";
        case Motion::Kind::oscillation:
            return "oscillation";
    }
    return "static";
}

}  // namespace

std::string render_manifest(const RunConfig& cfg, const std::string& command, int threads) {
    std::ostringstream out;
    out << "# resolved run manifest (re-runnable as a config file)\n";
    out << "# command = " << command << "\n";
    out << "# threads = " << threads << "\n";
    const auto& g = cfg.geometry;
    out << "[geometry]\n"
        << "source_to_iso_mm = " << fmt(g.source_to_iso_mm) << "\n"
        << "source_to_detector_mm = " << fmt(g.source_to_detector_mm) << "\n"
        << "detector_cols = " << g.detector_cols << "\n"
        << "detector_rows = " << g.detector_rows << "\n"
        << "detector_col_spacing_mm = " << fmt(g.detector_col_spacing_mm) << "\n"
        << "detector_row_spacing_mm = " << fmt(g.detector_row_spacing_mm) << "\n"
        << "num_views = " << g.num_views << "\n"
        << "first_angle_rad = " << fmt(g.first_angle_rad) << "\n"
        << "volume_nx = " << g.volume_dims[0] << "\n"
        << "volume_ny = " << g.volume_dims[1] << "\n"
        << "volume_nz = " << g.volume_dims[2] << "\n"
        << "voxel_dx_mm = " << fmt(g.voxel_size_mm[0]) << "\n"
        << "voxel_dy_mm = " << fmt(g.voxel_size_mm[1]) << "\n"
        << "voxel_dz_mm = " << fmt(g.voxel_size_mm[2]) << "\n";
    for (const auto& e : cfg.phantom.ellipsoids) {
        out << "[ellipsoid]\n"
            << "center_mm = " << fmt(e.center[0]) << " " << fmt(e.center[1]) << " "
            << fmt(e.center[2]) << "\n"
            << "semi_axes_mm = " << fmt(e.semi_axes[0]) << " " << fmt(e.semi_axes[1]) << " "
            << fmt(e.semi_axes[2]) << "\n"
            << "rotation_rad = " << fmt(e.rotation_z) << "\n"
            << "density = " << fmt(e.density) << "\n";
        out << "motion = " << motion_name(e.motion.kind);
        if (e.motion.kind == Motion::Kind::linear_drift)
            out << " " << fmt(e.motion.velocity[0]) << " " << fmt(e.motion.velocity[1]) << " "
                << fmt(e.motion.velocity[2]);
        else if (e.motion.kind == Motion::Kind::oscillation)
            out << " " << fmt(e.motion.amplitude[0]) << " " << fmt(e.motion.amplitude[1]) << " "
                << fmt(e.motion.amplitude[2]) << " " << fmt(e.motion.period) << " "
                << fmt(e.motion.phase);
        out << "\n";
    }
    out << "[acquisition]\n"
        << "noise = " << (cfg.acquisition.noise ? "on" : "off") << "\n"
        << "photons_i0 = " << fmt(cfg.acquisition.photons_i0) << "\n"
        << "seed = " << cfg.acquisition.seed << "\n";
    const auto& r = cfg.recon;
    out << "[recon]\n"
        << "max_iterations = " << r.max_iterations << "\n"
        << "step_size = "
        << (r.use_line_search ? std::string("line_search") : fmt(r.fixed_step)) << "\n"
        << "beta = " << fmt(r.regularizer.beta) << "\n"
        << "potential = "
        << (r.regularizer.potential == Potential::quadratic ? "quadratic" : "huber") << "\n"
        << "huber_delta = " << fmt(r.regularizer.huber_delta) << "\n"
        << "num_subsets = " << r.num_subsets << "\n"
        << "nesterov = " << (r.nesterov ? "on" : "off") << "\n"
        << "init = " << (r.init == InitMode::zero ? "zero" : "fbp") << "\n"
        << "half_scan_start = " << r.half_scan_start << "\n"
        << "mask = " << (r.mask_source == MaskSource::geometric ? "geometric" : "file") << "\n"
        << "feather_mm = " << fmt(r.feather_width) << "\n";
    if (!r.mask_file.empty()) out << "mask_file = " << r.mask_file << "\n";
    out << "transition = " << (r.transition == TransitionMode::binary ? "binary" : "parker")
        << "\n"
        << "weights = " << (cfg.weights_model == NoiseModel::uniform ? "uniform" : "photon")
        << "\n"
        << "convergence_tol = " << fmt(r.convergence_tol) << "\n";
    out << "[output]\n"
        << "dir = " << cfg.output.dir << "\n"
        << "sinogram_file = " << cfg.output.sinogram_file << "\n"
        << "ground_truth_file = " << cfg.output.ground_truth_file << "\n"
        << "mask_file = " << cfg.output.mask_file << "\n";
    return out.str();
}

}  // namespace saw
