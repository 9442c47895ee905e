#pragma once

// Command-line front end: one JSON config per run, commands
//   modes | sweep | synth | fit | estimate
// Every artifact is computed before anything is written; files are written
// atomically and listed with their SHA-256 in run_report.json.
//
// Exit codes: 0 success, 1 unexpected failure (e.g. output not writable),
// 2 configuration error, 3 every sweep point unstable, 4 data error.
//
// Linking: the embedding target needs OpenSSL::Crypto.

#include "magnon_hybrid/cavity_network.hpp"
#include "magnon_hybrid/errors.hpp"
#include "magnon_hybrid/fitting.hpp"
#include "magnon_hybrid/io.hpp"
#include "magnon_hybrid/magnon_model.hpp"
#include "magnon_hybrid/quadratic_hamiltonian.hpp"
#include "magnon_hybrid/regime.hpp"
#include "magnon_hybrid/spectra.hpp"
#include "magnon_hybrid/svg.hpp"
#include "magnon_hybrid/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace magnon_hybrid::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* tool_name = "magnon-hybrid";
inline constexpr const char* tool_version = "1.0.0";
inline constexpr int schema_version = 1;

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_unstable = 3, exit_data = 4 };

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Write to a temporary sibling, then rename over the target.
inline void write_atomic(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot rename into '" + path.string() + "'");
    }
}

// ---- configuration -------------------------------------------------------------

namespace detail {

using io::detail::check_keys;
using io::detail::number;
using io::detail::number_or;
using io::detail::vector;

inline json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(what + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
    }
}

// --set a.b.c=value; value is JSON when it parses, else a string.
inline void apply_set(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("--set: empty path segment in '" + path + "'");
        const bool last = dot == std::string::npos;
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                std::size_t used = 0;
                idx = std::stoul(key, &used);
                if (used != key.size()) throw std::invalid_argument(key);
            } catch (const std::exception&) {
                throw ConfigError("--set: '" + key + "' is not an array index in '" + path + "'");
            }
            if (idx >= node->size()) throw ConfigError("--set: index " + key + " out of range in '" + path + "'");
            node = &(*node)[idx];
        } else {
            if (!node->is_object()) {
                if (!node->is_null()) throw ConfigError("--set: '" + path + "' descends into a non-object");
                *node = json::object();
            }
            node = &(*node)[key];
        }
        if (last) {
            *node = value;
            return;
        }
        start = dot + 1;
    }
}

inline const json* block(const json& config, const char* name) {
    return config.contains(name) ? &config.at(name) : nullptr;
}

inline const json& require_block(const json& config, const char* name, const std::string& command) {
    if (!config.contains(name)) throw ConfigError(std::string("command '") + command + "' needs a '" + name + "' block");
    return config.at(name);
}

inline std::size_t count(const json& j, const std::string& key, const std::string& ctx, std::size_t min_value) {
    if (!j.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value))
        throw ConfigError(ctx + "." + key + ": expected an integer >= " + std::to_string(min_value));
    return static_cast<std::size_t>(v.get<long long>());
}

inline std::string string_or(const json& j, const std::string& key, const std::string& fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ConfigError(ctx + "." + key + ": expected a string");
    return j.at(key).get<std::string>();
}

inline CavityNetwork parse_network(const json& j) {
    const std::string ctx = "network";
    io::detail::require_object(j, ctx);
    if (!j.contains("type")) return io::network_from_json(j, ctx);
    const std::string type = string_or(j, "type", "", ctx);
    CavityNetwork net;
    if (type == "ring") {
        check_keys(j, {"type", "n_posts", "omega0_ghz", "kappa", "perturb_epsilon"}, ctx);
        net = ring_network(static_cast<int>(count(j, "n_posts", ctx, 2)), number(j, "omega0_ghz", ctx), number(j, "kappa", ctx));
    } else if (type == "double_chain") {
        check_keys(j, {"type", "omega0_ghz", "kappa_chain", "kappa_cross", "perturb_epsilon"}, ctx);
        net = double_chain_network(number(j, "omega0_ghz", ctx), number(j, "kappa_chain", ctx), number(j, "kappa_cross", ctx));
    } else {
        throw ConfigError(ctx + ".type: expected 'ring' or 'double_chain'");
    }
    if (j.contains("perturb_epsilon")) net = perturb_symmetry(net, number(j, "perturb_epsilon", ctx));
    return net;
}

struct ModelSpec {
    ModelKind kind = ModelKind::Generic;
    HybridModel model;  // ordinary-frequency couplings; magnon frequency set per field
    CouplingConvention convention = CouplingConvention::Ordinary;
};

inline CouplingConvention parse_convention(const json& j, const std::string& ctx) {
    const std::string c = string_or(j, "coupling_convention", "ordinary", ctx);
    if (c == "ordinary") return CouplingConvention::Ordinary;
    if (c == "over_pi") return CouplingConvention::OverPi;
    throw ConfigError(ctx + ".coupling_convention: expected 'ordinary' or 'over_pi'");
}

inline std::vector<double> sized_vector(const json& j, const std::string& key, std::size_t n, const std::string& ctx) {
    auto v = vector(j, key, ctx);
    if (v.size() != n) throw ConfigError(ctx + "." + key + ": expected " + std::to_string(n) + " values");
    return v;
}

inline ModelSpec parse_model(const json& j, const MagnonMode& magnon) {
    const std::string ctx = "model";
    io::detail::require_object(j, ctx);
    ModelSpec spec;
    if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError(ctx + ".kind: expected 'n4', 'n8' or 'generic'");
    const std::string kind = j.at("kind").get<std::string>();
    spec.convention = parse_convention(j, ctx);
    const double scale = spec.convention == CouplingConvention::OverPi ? 0.5 : 1.0;
    if (kind == "n4") {
        check_keys(j, {"kind", "coupling_convention", "omega_c_ghz", "g_rl_ghz", "g_ghz", "photon_linewidth_ghz"}, ctx);
        spec.kind = ModelKind::N4;
        spec.model = build_n4(number(j, "omega_c_ghz", ctx), number(j, "g_rl_ghz", ctx), scale * number(j, "g_ghz", ctx), 1.0);
        if (j.contains("photon_linewidth_ghz")) spec.model.photon_linewidth_ghz = sized_vector(j, "photon_linewidth_ghz", 2, ctx);
    } else if (kind == "n8") {
        check_keys(j, {"kind", "coupling_convention", "omega_c_ghz", "g_ghz", "photon_linewidth_ghz"}, ctx);
        spec.kind = ModelKind::N8;
        const auto w = sized_vector(j, "omega_c_ghz", 3, ctx);
        const auto g = sized_vector(j, "g_ghz", 3, ctx);
        spec.model = build_n8(w[0], w[1], w[2], scale * g[0], scale * g[1], scale * g[2], 1.0);
        if (j.contains("photon_linewidth_ghz")) spec.model.photon_linewidth_ghz = sized_vector(j, "photon_linewidth_ghz", 3, ctx);
    } else if (kind == "generic") {
        check_keys(j,
                   {"kind", "coupling_convention", "photon_freq_ghz", "photon_coupling_ghz", "magnon_coupling_ghz",
                    "photon_linewidth_ghz"},
                   ctx);
        spec.kind = ModelKind::Generic;
        json doc = j;
        doc.erase("kind");
        doc.erase("coupling_convention");
        spec.model = io::model_from_json(doc, ctx);
        for (double& g : spec.model.magnon_coupling_ghz) g *= scale;
    } else {
        throw ConfigError(ctx + ".kind: expected 'n4', 'n8' or 'generic'");
    }
    spec.model.magnon_linewidth_ghz = magnon.linewidth_ghz;
    spec.model.magnon_freq_ghz = 1.0;
    try {
        spec.model.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    return spec;
}

inline std::vector<double> parse_field_axis(const json& j) {
    const std::string ctx = "sweep";
    check_keys(j, {"field_start_t", "field_stop_t", "field_points", "background_map"}, ctx);
    const double a = number(j, "field_start_t", ctx), b = number(j, "field_stop_t", ctx);
    const std::size_t n = count(j, "field_points", ctx, 1);
    if (n > 1 && !(b > a)) throw ConfigError(ctx + ": field_stop_t must exceed field_start_t");
    if (!(a >= 0.0)) throw ConfigError(ctx + ".field_start_t: fields must be non-negative");
    return linspace(a, b, n);
}

struct RidgeSpec {
    double prominence_db = 6.0;
    std::size_t max_peaks = 8;
};

inline RidgeSpec parse_ridges(const json& j, const std::string& ctx) {
    check_keys(j, {"prominence_db", "max_peaks_per_column"}, ctx);
    RidgeSpec r;
    r.prominence_db = number_or(j, "prominence_db", r.prominence_db, ctx);
    if (j.contains("max_peaks_per_column")) r.max_peaks = count(j, "max_peaks_per_column", ctx, 1);
    if (!(r.prominence_db >= 0.0)) throw ConfigError(ctx + ".prominence_db: must be non-negative");
    return r;
}

struct SynthSpec {
    std::vector<double> freqs;
    SynthOptions options;
    double noise_db = 0.0;
    std::uint64_t seed = 0;
    std::optional<RidgeSpec> ridges;
    bool write_json = false;
};

inline SynthSpec parse_synth(const json& j) {
    const std::string ctx = "synth";
    check_keys(j, {"freq_start_ghz", "freq_stop_ghz", "freq_points", "amplitude_db", "floor_db", "noise_db", "seed", "ridges", "write_json"},
               ctx);
    SynthSpec s;
    const double a = number(j, "freq_start_ghz", ctx), b = number(j, "freq_stop_ghz", ctx);
    const std::size_t n = count(j, "freq_points", ctx, 0);
    if (n == 0) throw ConfigError(ctx + ".freq_points: frequency axis is empty");
    if (n > 1 && !(b > a)) throw ConfigError(ctx + ": freq_stop_ghz must exceed freq_start_ghz");
    s.freqs = linspace(a, b, n);
    s.options.amplitude_db = number_or(j, "amplitude_db", 0.0, ctx);
    s.options.floor_db = number_or(j, "floor_db", db_floor, ctx);
    s.noise_db = number_or(j, "noise_db", 0.0, ctx);
    if (!(s.noise_db >= 0.0)) throw ConfigError(ctx + ".noise_db: must be non-negative");
    if (j.contains("seed")) s.seed = count(j, "seed", ctx, 0);
    if (j.contains("ridges")) s.ridges = parse_ridges(j.at("ridges"), ctx + ".ridges");
    if (j.contains("write_json")) {
        if (!j.at("write_json").is_boolean()) throw ConfigError(ctx + ".write_json: expected true or false");
        s.write_json = j.at("write_json").get<bool>();
    }
    return s;
}

struct FitSpec {
    fs::path data;
    std::vector<std::string> free_params;
    std::map<std::string, double> initial;
    std::map<std::string, Bounds> bounds;
    FitOptions options;
    RidgeSpec ridges;
    std::optional<double> fsr_ghz;
    RegimeThresholds thresholds;
};

inline FitSpec parse_fit(const json& j, const fs::path& config_dir, ModelKind kind, const HybridModel& base) {
    const std::string ctx = "fit";
    check_keys(j, {"data", "free_params", "initial", "bounds", "options", "ridges", "fsr_ghz", "ultrastrong_ratio"}, ctx);
    FitSpec f;
    if (!j.contains("data") || !j.at("data").is_string()) throw ConfigError(ctx + ".data: expected a file path");
    f.data = fs::path(j.at("data").get<std::string>());
    if (f.data.is_relative()) f.data = config_dir / f.data;

    // The shared keys follow the fit-problem document layout.
    json problem = json::object();
    problem["model_kind"] = to_string(kind);
    problem["base_model"] = io::to_json(base);
    for (const char* k : {"free_params", "initial", "bounds", "options"})
        if (j.contains(k)) problem[k] = j.at(k);
    if (!problem.contains("free_params")) {
        auto names = parameter_names(kind, base.n_photons());
        names.resize(names.size() - 2);  // gyro and field offset stay fixed by default
        problem["free_params"] = names;
    }
    const FitProblem parsed = io::fit_problem_from_json(problem, ctx);
    auto check_name = [&](const std::string& name, const std::string& where) {
        try {
            (void)magnon_hybrid::detail::resolve_parameter(kind, base.n_photons(), name);
        } catch (const InvalidArgument& e) {
            throw ConfigError(ctx + "." + where + ": " + e.what());
        }
    };
    for (const auto& name : parsed.free_params) check_name(name, "free_params");
    for (const auto& kv : parsed.initial) check_name(kv.first, "initial");
    for (const auto& kv : parsed.bounds) check_name(kv.first, "bounds");
    f.free_params = parsed.free_params;
    f.initial = parsed.initial;
    f.bounds = parsed.bounds;
    f.options = parsed.options;
    if (j.contains("ridges")) f.ridges = parse_ridges(j.at("ridges"), ctx + ".ridges");
    if (j.contains("fsr_ghz")) {
        f.fsr_ghz = number(j, "fsr_ghz", ctx);
        if (!(*f.fsr_ghz > 0.0)) throw ConfigError(ctx + ".fsr_ghz: must be positive");
    }
    f.thresholds.ultrastrong_ratio = number_or(j, "ultrastrong_ratio", f.thresholds.ultrastrong_ratio, ctx);
    if (!(f.thresholds.ultrastrong_ratio > 0.0)) throw ConfigError(ctx + ".ultrastrong_ratio: must be positive");
    return f;
}

struct EstimateSpec {
    double cavity_freq_ghz = 0.0;
    std::optional<double> coupling_ghz;
};

inline EstimateSpec parse_estimate(const json& j) {
    const std::string ctx = "estimate";
    check_keys(j, {"cavity_freq_ghz", "coupling_ghz"}, ctx);
    EstimateSpec e;
    e.cavity_freq_ghz = number(j, "cavity_freq_ghz", ctx);
    if (j.contains("coupling_ghz")) e.coupling_ghz = number(j, "coupling_ghz", ctx);
    return e;
}

} // namespace detail
// ---- commands ------------------------------------------------------------------

struct Artifact {
    std::string name;  // relative to the output directory
    std::string bytes;
};

struct Outcome {
    int code = exit_ok;
    std::vector<Artifact> artifacts;
    json summary = json::object();
    std::vector<std::string> warnings;
};

inline const std::vector<std::pair<std::string, std::string>>& commands() {
    static const std::vector<std::pair<std::string, std::string>> names{
        {"modes", "cavity eigenmodes, labels and FSR table"},
        {"sweep", "polariton branches versus field (CSV + SVG)"},
        {"synth", "synthetic transmission map"},
        {"fit", "fit a model to branch samples or a map"},
        {"estimate", "coupling or filling-factor estimate"}};
    return names;
}

// Parse, apply overrides, and check the top level; throws ConfigError.
inline json load_config(const fs::path& path, const std::vector<std::string>& sets = {}) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const DataError&) {
        throw ConfigError("cannot read config '" + path.string() + "'");
    }
    json config = detail::parse_json_text(text, path.string());
    for (const auto& s : sets) detail::apply_set(config, s);
    io::detail::require_object(config, "config");
    io::detail::check_keys(config, {"schema_version", "network", "material", "model", "sweep", "synth", "fit", "estimate", "output"},
                           "config");
    if (!config.contains("schema_version")) throw ConfigError("config: missing key 'schema_version'");
    const json& v = config.at("schema_version");
    if (!v.is_number_integer() || v.get<long long>() != schema_version)
        throw ConfigError("config.schema_version: only version " + std::to_string(schema_version) + " is supported");
    if (config.contains("output")) {
        io::detail::check_keys(config.at("output"), {"dir"}, "config.output");
        if (!config.at("output").contains("dir") || !config.at("output").at("dir").is_string())
            throw ConfigError("config.output.dir: expected a path");
    }
    return config;
}

namespace detail {

inline io::Material material_of(const json& config, const std::string& command) {
    auto m = io::material_from_json(require_block(config, "material", command));
    try {
        m.magnon.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("material: ") + e.what());
    }
    return m;
}

inline ModelSpec model_of(const json& config, const io::Material& material, const std::string& command) {
    return parse_model(require_block(config, "model", command), material.magnon);
}

inline SpectralMap read_map(const fs::path& path) {
    const std::string text = read_file(path);
    if (path.extension() == ".json") {
        try {
            return io::map_from_json(json::parse(text));
        } catch (const json::exception& e) {
            throw DataError("'" + path.string() + "': " + e.what());
        } catch (const ConfigError& e) {
            throw DataError("'" + path.string() + "': " + e.what());
        }
    }
    return io::map_from_csv(text);
}

inline bool looks_like_map(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        return line.compare(first, 16, "field_t\\freq_ghz") == 0;
    }
    return false;
}

inline std::string text_line(const std::string& s) { return s + "\n"; }

} // namespace detail

inline Outcome cmd_modes(const json& config, const fs::path& = {}) {
    const CavityNetwork net = detail::parse_network(detail::require_block(config, "network", "modes"));
    ModeSpectrum spec;
    try {
        spec = solve_modes(net);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("network: ") + e.what());
    } catch (const NonPhysical& e) {
        throw ConfigError(std::string("network: ") + e.what());
    }
    Outcome out;
    json doc = io::to_json(spec);
    doc["network"] = io::to_json(net);
    out.artifacts.push_back({"modes.json", doc.dump(2) + "\n"});
    out.artifacts.push_back({"modes.csv", io::modes_csv(spec)});
    out.artifacts.push_back({"fsr.csv", io::fsr_csv(spec)});
    std::size_t degenerate = 0;
    for (const auto& m : spec.modes) degenerate += m.degenerate ? 1 : 0;
    out.summary = {{"n_modes", spec.modes.size()}, {"n_degenerate", degenerate}};
    return out;
}

inline Outcome cmd_sweep(const json& config, const fs::path& config_dir = {}) {
    const auto material = detail::material_of(config, "sweep");
    const auto spec = detail::model_of(config, material, "sweep");
    const json& sj = detail::require_block(config, "sweep", "sweep");
    const auto fields = detail::parse_field_axis(sj);
    std::optional<SpectralMap> background;
    if (sj.contains("background_map")) {
        if (!sj.at("background_map").is_string()) throw ConfigError("sweep.background_map: expected a file path");
        fs::path p = sj.at("background_map").get<std::string>();
        if (p.is_relative()) p = config_dir / p;
        background = detail::read_map(p);
    }
    const BranchSet branches = sweep(spec.model, material.magnon, fields);
    std::size_t unstable = 0;
    for (const auto& pt : branches.points) unstable += pt.stable ? 0 : 1;

    Outcome out;
    out.artifacts.push_back({"branches.csv", io::branches_csv(branches)});
    out.artifacts.push_back({"branches.svg", svg::branches_svg(branches, background ? &*background : nullptr, "Polariton branches")});
    out.summary = {{"n_fields", fields.size()}, {"n_branches", branches.n_branches()}, {"n_unstable", unstable}};
    if (unstable > 0) out.warnings.push_back(std::to_string(unstable) + " sweep point(s) unstable; marked stable=false");
    if (unstable == fields.size()) out.code = exit_unstable;
    return out;
}

inline SpectralMap synthesize(const json& config, std::optional<detail::RidgeSpec>* ridges = nullptr, bool* write_json = nullptr) {
    const auto material = detail::material_of(config, "synth");
    const auto spec = detail::model_of(config, material, "synth");
    const auto fields = detail::parse_field_axis(detail::require_block(config, "sweep", "synth"));
    const auto synth = detail::parse_synth(detail::require_block(config, "synth", "synth"));
    SpectralMap map = synth_map(spec.model, material.magnon, fields, synth.freqs, synth.options);
    if (synth.noise_db > 0.0) {
        std::mt19937_64 rng(synth.seed);
        std::normal_distribution<double> noise(0.0, synth.noise_db);
        for (Eigen::Index i = 0; i < map.magnitude_db.rows(); ++i)
            for (Eigen::Index k = 0; k < map.magnitude_db.cols(); ++k)
                map.magnitude_db(i, k) = std::max(map.magnitude_db(i, k) + noise(rng), synth.options.floor_db);
    }
    if (ridges) *ridges = synth.ridges;
    if (write_json) *write_json = synth.write_json;
    return map;
}

inline Outcome cmd_synth(const json& config, const fs::path& = {}) {
    std::optional<detail::RidgeSpec> ridges;
    bool write_json = false;
    const SpectralMap map = synthesize(config, &ridges, &write_json);
    Outcome out;
    out.artifacts.push_back({"map.csv", io::map_csv(map)});
    if (write_json) out.artifacts.push_back({"map.json", io::to_json(map).dump() + "\n"});
    out.summary = {{"n_fields", map.field_axis_t.size()}, {"n_freqs", map.freq_axis_ghz.size()}};
    if (ridges) {
        const RidgePoints r = extract_ridges(map, ridges->prominence_db, ridges->max_peaks);
        out.artifacts.push_back({"ridges.csv", io::ridges_csv(r)});
        out.summary["n_ridge_points"] = r.points.size();
    }
    return out;
}

inline Outcome cmd_fit(const json& config, const fs::path& config_dir = {}) {
    const auto material = detail::material_of(config, "fit");
    const auto spec = detail::model_of(config, material, "fit");
    const auto fspec = detail::parse_fit(detail::require_block(config, "fit", "fit"), config_dir, spec.kind, spec.model);
    std::optional<CavityNetwork> network;
    if (config.contains("network")) network = detail::parse_network(config.at("network"));

    Outcome out;
    const std::string text = read_file(fspec.data);
    std::vector<BranchSample> data;
    json data_echo = {{"path", fspec.data.string()}, {"sha256", sha256_hex(text)}};
    if (fspec.data.extension() == ".json" || detail::looks_like_map(text)) {
        const SpectralMap map = detail::read_map(fspec.data);
        const RidgePoints r = extract_ridges(map, fspec.ridges.prominence_db, fspec.ridges.max_peaks);
        data = samples_from_ridges(r);
        out.artifacts.push_back({"ridges.csv", io::ridges_csv(r)});
        data_echo["kind"] = "map";
    } else {
        data = io::samples_from_csv(text);
        data_echo["kind"] = "samples";
    }
    data_echo["n_samples"] = data.size();
    if (data.size() < 2 * fspec.free_params.size() || data.empty())
        throw DataError("insufficient data: " + std::to_string(data.size()) + " sample(s) for " +
                        std::to_string(fspec.free_params.size()) + " free parameter(s)");

    FitProblem problem;
    problem.data = data;
    problem.kind = spec.kind;
    problem.base_model = spec.model;
    problem.magnon = material.magnon;
    problem.free_params = fspec.free_params;
    problem.bounds = fspec.bounds;
    problem.initial = fspec.initial;
    problem.options = fspec.options;
    FitResult result;
    try {
        result = fit(problem);
    } catch (const Instability& e) {
        throw ConfigError(std::string("fit: initial parameters are unstable: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("fit: ") + e.what());
    }

    FsrSource fsr;
    std::string fsr_source = "coupled_modes";
    if (fspec.fsr_ghz) {
        fsr = *fspec.fsr_ghz;
        fsr_source = "config";
    } else if (network) {
        try {
            fsr = solve_modes(*network);
        } catch (const Error& e) {
            throw ConfigError(std::string("network: ") + e.what());
        }
        fsr_source = "network";
    }
    const RegimeReport regime = classify(result.model, fsr, fspec.thresholds);

    json fit_doc = io::to_json(result);
    fit_doc["model_kind"] = to_string(spec.kind);
    fit_doc["data"] = data_echo;
    json regime_doc = io::to_json(regime);
    regime_doc["fsr_source"] = fsr_source;
    out.artifacts.push_back({"fit_result.json", fit_doc.dump(2) + "\n"});
    out.artifacts.push_back({"regime.json", regime_doc.dump(2) + "\n"});
    out.artifacts.push_back({"residuals.svg", svg::residuals_svg(data, result, "Fit residuals")});

    json params = json::object();
    for (std::size_t i = 0; i < result.param_names.size(); ++i) params[result.param_names[i]] = result.params[i];
    out.summary = {{"converged", result.converged},
                   {"message", result.message},
                   {"residual_rms_ghz", result.residual_rms},
                   {"params", params},
                   {"superstrong_ordinary", regime.ordinary.superstrong},
                   {"superstrong_over_pi", regime.over_pi.superstrong}};
    if (!result.converged) out.warnings.push_back("fit did not converge: " + result.message);
    return out;
}

inline Outcome cmd_estimate(const json& config, const fs::path& = {}) {
    const json& mj = detail::require_block(config, "material", "estimate");
    const auto material = io::material_from_json(mj);
    const auto est = detail::parse_estimate(detail::require_block(config, "estimate", "estimate"));
    if (!material.has_filling_factor && !est.coupling_ghz)
        throw ConfigError("estimate: give material.filling_factor (coupling estimate) or estimate.coupling_ghz (filling estimate)");
    if (!mj.contains("spin_density_per_m3")) throw ConfigError("material: missing key 'spin_density_per_m3'");

    Outcome out;
    json doc = {{"inputs",
                 {{"spin_density_per_m3", material.ensemble.spin_density_per_m3},
                  {"spin_quantum", material.ensemble.spin_quantum},
                  {"gyro_ghz_per_t", material.magnon.gyro_ghz_per_t},
                  {"cavity_freq_ghz", est.cavity_freq_ghz}}},
                {"formula", "g/2pi = (gamma/2) * sqrt(2 S mu0 hbar omega_c n_s xi) / 2pi, gamma = 2pi * gyro"}};
    const auto flag_filling = [&](double xi) {
        if (xi >= 1.0) out.warnings.push_back("filling factor " + io::format_number(xi) + " is unphysical for sphere-in-cavity");
    };
    try {
        if (material.has_filling_factor) {
            const double g = estimate_coupling(material.ensemble, est.cavity_freq_ghz, material.magnon.gyro_ghz_per_t);
            doc["inputs"]["filling_factor"] = material.ensemble.filling_factor;
            doc["g_est_ghz"] = g;
            out.summary["g_est_ghz"] = g;
            flag_filling(material.ensemble.filling_factor);
        }
        if (est.coupling_ghz) {
            const double xi = estimate_filling(*est.coupling_ghz, material.ensemble, est.cavity_freq_ghz, material.magnon.gyro_ghz_per_t);
            doc["inputs"]["coupling_ghz"] = *est.coupling_ghz;
            doc["xi_est"] = xi;
            out.summary["xi_est"] = xi;
            flag_filling(xi);
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("estimate: ") + e.what());
    }
    doc["warnings"] = out.warnings;
    out.artifacts.push_back({"estimate.json", doc.dump(2) + "\n"});
    return out;
}

inline Outcome dispatch(const std::string& command, const json& config, const fs::path& config_dir) {
    if (command == "modes") return cmd_modes(config, config_dir);
    if (command == "sweep") return cmd_sweep(config, config_dir);
    if (command == "synth") return cmd_synth(config, config_dir);
    if (command == "fit") return cmd_fit(config, config_dir);
    if (command == "estimate") return cmd_estimate(config, config_dir);
    throw ConfigError("unknown command '" + command + "'");
}

// ---- execution -----------------------------------------------------------------

struct Invocation {
    std::string command;
    fs::path config_path;
    std::vector<std::string> sets;
    std::optional<fs::path> out_dir;  // overrides config.output.dir; default is the working directory
};

namespace detail {

inline std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace detail

// Runs one command end to end. Nothing is written unless the command succeeds
// (or reports exit 3 with its artifacts).
inline int execute(const Invocation& inv, std::ostream& out, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = detail::utc_now();
    json config;
    Outcome outcome;
    fs::path out_dir;
    try {
        config = load_config(inv.config_path, inv.sets);
        const fs::path config_dir = inv.config_path.parent_path();
        if (inv.out_dir) out_dir = *inv.out_dir;
        else if (config.contains("output")) {
            out_dir = config.at("output").at("dir").get<std::string>();
            if (out_dir.is_relative()) out_dir = config_dir / out_dir;
        } else out_dir = ".";
        outcome = dispatch(inv.command, config, config_dir);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const InvalidArgument& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }

    try {
        fs::create_directories(out_dir);
        json manifest = json::array();
        for (const auto& a : outcome.artifacts) {
            write_atomic(out_dir / a.name, a.bytes);
            manifest.push_back({{"path", a.name}, {"sha256", sha256_hex(a.bytes)}, {"bytes", a.bytes.size()}});
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json report = {{"tool", tool_name},
                       {"version", tool_version},
                       {"command", inv.command},
                       {"config_path", inv.config_path.string()},
                       {"overrides", inv.sets},
                       {"inputs", config},
                       {"outputs", manifest},
                       {"summary", outcome.summary},
                       {"warnings", outcome.warnings},
                       {"exit_code", outcome.code},
                       {"timing", {{"started_utc", started}, {"wall_seconds", wall}}}};
        write_atomic(out_dir / "run_report.json", report.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }

    for (const auto& w : outcome.warnings) err << "warning: " << w << "\n";
    out << outcome.summary.dump() << "\n";
    if (outcome.code == exit_unstable) err << "error: every sweep point is unstable\n";
    return outcome.code;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Photon-magnon hybrid modes in multi-post cavities", tool_name};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1, 1);
    Invocation inv;
    std::string out_dir;
    for (const auto& [name, description] : commands()) {
        auto* sub = app.add_subcommand(name, description);
        sub->add_option("--config", inv.config_path, "JSON run configuration")->required();
        sub->add_option("--set", inv.sets, "override a config value, dotted.key=value")->take_all();
        sub->add_option("--out", out_dir, "output directory");
        sub->callback([&inv, command = name] { inv.command = command; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForVersion&) {
        out << tool_version << "\n";
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return exit_config;
    }
    if (!out_dir.empty()) inv.out_dir = fs::path(out_dir);
    return execute(inv, out, err);
}

} // namespace magnon_hybrid::cli
