#pragma once

// JSON documents and CSV tables for every artifact. Readers are strict:
// unknown keys and malformed numbers are errors. Numbers in CSV use %.9g
// with '.' as separator and '\n' line endings.

#include "magnon_hybrid/cavity_network.hpp"
#include "magnon_hybrid/errors.hpp"
#include "magnon_hybrid/fitting.hpp"
#include "magnon_hybrid/magnon_model.hpp"
#include "magnon_hybrid/quadratic_hamiltonian.hpp"
#include "magnon_hybrid/regime.hpp"
#include "magnon_hybrid/spectra.hpp"
#include "magnon_hybrid/sweep.hpp"

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace magnon_hybrid::io {

using json = nlohmann::json;

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0.0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

// Parses one CSV cell; accepts nan and inf spellings.
inline double parse_number(std::string_view cell, const std::string& where) {
    std::string s(cell);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
    s.erase(0, start);
    if (s.empty()) throw DataError(where + ": empty number");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw DataError(where + ": cannot parse '" + s + "' as a number");
    return v;
}

// ---- JSON helpers ------------------------------------------------------------

namespace detail {

inline const json& require_object(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
    return j;
}

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& ctx) {
    require_object(j, ctx);
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(ctx + ": unknown key '" + key + "'");
    }
}

inline double number(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(ctx + "." + key + ": expected a number");
    return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& ctx) {
    return j.contains(key) ? number(j, key, ctx) : fallback;
}

inline std::vector<double> vector(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_array()) throw ConfigError(ctx + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(ctx + "." + key + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline Eigen::MatrixXd matrix(const json& j, const std::string& key, std::size_t n, const std::string& ctx) {
    if (!j.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
    const json& v = j.at(key);
    const auto bad = [&] { return ConfigError(ctx + "." + key + ": expected a " + std::to_string(n) + "x" + std::to_string(n) + " array"); };
    if (!v.is_array() || v.size() != n) throw bad();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        if (!v[r].is_array() || v[r].size() != n) throw bad();
        for (std::size_t c = 0; c < n; ++c) {
            if (!v[r][c].is_number()) throw bad();
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
        }
    }
    return m;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

// Infinite values become null.
inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

} // namespace detail

// ---- cavity network ----------------------------------------------------------

inline json to_json(const CavityNetwork& net) {
    return {{"n_posts", net.n_posts()}, {"post_freq_ghz", net.post_freq_ghz}, {"coupling", detail::matrix_json(net.coupling)}};
}

inline CavityNetwork network_from_json(const json& j, const std::string& ctx = "network") {
    detail::check_keys(j, {"n_posts", "post_freq_ghz", "coupling"}, ctx);
    CavityNetwork net;
    net.post_freq_ghz = detail::vector(j, "post_freq_ghz", ctx);
    if (j.contains("n_posts")) {
        if (!j.at("n_posts").is_number_integer() || j.at("n_posts").get<long long>() != static_cast<long long>(net.post_freq_ghz.size()))
            throw ConfigError(ctx + ".n_posts: must equal the length of post_freq_ghz");
    }
    net.coupling = detail::matrix(j, "coupling", net.post_freq_ghz.size(), ctx);
    return net;
}

inline json to_json(const ModeSpectrum& spec) {
    json modes = json::array();
    for (std::size_t k = 0; k < spec.modes.size(); ++k) {
        const auto& m = spec.modes[k];
        modes.push_back({{"index", k},
                         {"frequency_ghz", m.frequency_ghz},
                         {"label", m.label},
                         {"degenerate", m.degenerate},
                         {"pattern", std::vector<double>(m.pattern.data(), m.pattern.data() + m.pattern.size())}});
    }
    return {{"modes", modes}, {"fsr_list_ghz", spec.fsr_list_ghz}};
}

inline std::string modes_csv(const ModeSpectrum& spec) {
    std::ostringstream out;
    out << "mode_index,frequency_ghz,label,degenerate\n";
    for (std::size_t k = 0; k < spec.modes.size(); ++k)
        out << k << ',' << format_number(spec.modes[k].frequency_ghz) << ',' << spec.modes[k].label << ','
            << (spec.modes[k].degenerate ? "true" : "false") << '\n';
    return out.str();
}

inline std::string fsr_csv(const ModeSpectrum& spec) {
    std::ostringstream out;
    out << "lower_index,upper_index,fsr_ghz\n";
    for (std::size_t k = 0; k < spec.fsr_list_ghz.size(); ++k)
        out << k << ',' << k + 1 << ',' << format_number(spec.fsr_list_ghz[k]) << '\n';
    return out.str();
}

// ---- material ----------------------------------------------------------------

struct Material {
    MagnonMode magnon;
    SpinEnsemble ensemble;
    bool has_filling_factor = false;
};

inline Material material_from_json(const json& j, const std::string& ctx = "material") {
    detail::check_keys(j,
                       {"gyro_ghz_per_t", "field_offset_t", "linewidth_ghz", "spin_density_per_m3", "spin_quantum",
                        "filling_factor", "sphere_diameter_m"},
                       ctx);
    Material m;
    m.magnon.gyro_ghz_per_t = detail::number_or(j, "gyro_ghz_per_t", m.magnon.gyro_ghz_per_t, ctx);
    m.magnon.field_offset_t = detail::number_or(j, "field_offset_t", m.magnon.field_offset_t, ctx);
    m.magnon.linewidth_ghz = detail::number_or(j, "linewidth_ghz", m.magnon.linewidth_ghz, ctx);
    m.ensemble.spin_density_per_m3 = detail::number_or(j, "spin_density_per_m3", m.ensemble.spin_density_per_m3, ctx);
    m.ensemble.spin_quantum = detail::number_or(j, "spin_quantum", m.ensemble.spin_quantum, ctx);
    m.ensemble.sphere_diameter_m = detail::number_or(j, "sphere_diameter_m", m.ensemble.sphere_diameter_m, ctx);
    m.has_filling_factor = j.contains("filling_factor");
    m.ensemble.filling_factor = detail::number_or(j, "filling_factor", m.ensemble.filling_factor, ctx);
    return m;
}

inline json to_json(const MagnonMode& m) {
    return {{"gyro_ghz_per_t", m.gyro_ghz_per_t}, {"field_offset_t", m.field_offset_t}, {"linewidth_ghz", m.linewidth_ghz}};
}

inline json to_json(const Material& m) {
    json j = to_json(m.magnon);
    j["spin_density_per_m3"] = m.ensemble.spin_density_per_m3;
    j["spin_quantum"] = m.ensemble.spin_quantum;
    j["sphere_diameter_m"] = m.ensemble.sphere_diameter_m;
    if (m.has_filling_factor) j["filling_factor"] = m.ensemble.filling_factor;
    return j;
}

// ---- hybrid model ------------------------------------------------------------

inline json to_json(const HybridModel& m) {
    return {{"photon_freq_ghz", m.photon_freq_ghz},
            {"photon_coupling_ghz", detail::matrix_json(m.photon_coupling_ghz)},
            {"magnon_freq_ghz", m.magnon_freq_ghz},
            {"magnon_coupling_ghz", m.magnon_coupling_ghz},
            {"photon_linewidth_ghz", m.photon_linewidth_ghz},
            {"magnon_linewidth_ghz", m.magnon_linewidth_ghz}};
}

inline HybridModel model_from_json(const json& j, const std::string& ctx = "model") {
    detail::check_keys(j,
                       {"photon_freq_ghz", "photon_coupling_ghz", "magnon_freq_ghz", "magnon_coupling_ghz",
                        "photon_linewidth_ghz", "magnon_linewidth_ghz"},
                       ctx);
    HybridModel m;
    m.photon_freq_ghz = detail::vector(j, "photon_freq_ghz", ctx);
    const auto n = m.photon_freq_ghz.size();
    m.photon_coupling_ghz = j.contains("photon_coupling_ghz")
                                ? detail::matrix(j, "photon_coupling_ghz", n, ctx)
                                : Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.magnon_freq_ghz = detail::number_or(j, "magnon_freq_ghz", 0.0, ctx);
    m.magnon_coupling_ghz = detail::vector(j, "magnon_coupling_ghz", ctx);
    m.photon_linewidth_ghz = j.contains("photon_linewidth_ghz") ? detail::vector(j, "photon_linewidth_ghz", ctx)
                                                                : std::vector<double>(n, 0.0);
    m.magnon_linewidth_ghz = detail::number_or(j, "magnon_linewidth_ghz", 0.0, ctx);
    try {
        m.validate_structure();
    } catch (const InvalidArgument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    return m;
}

// ---- branches and samples ----------------------------------------------------

// One row per (field, branch). Unstable points carry one row with
// branch_index -1, nan values and stable = false.
inline std::string branches_csv(const BranchSet& b) {
    std::ostringstream out;
    out << "field_t,branch_index,freq_ghz,magnon_fraction,stable\n";
    for (std::size_t i = 0; i < b.points.size(); ++i) {
        const auto& p = b.points[i];
        const std::string field = format_number(b.field_axis_t[i]);
        if (!p.stable) {
            out << field << ",-1,nan,nan,false\n";
            continue;
        }
        for (std::size_t k = 0; k < p.size(); ++k)
            out << field << ',' << k << ',' << format_number(p.frequencies_ghz[k]) << ','
                << format_number(p.magnon_fraction(k)) << ",true\n";
    }
    return out.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline std::string trim(std::string s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t a = 0;
    while (a < s.size() && (s[a] == ' ' || s[a] == '\t')) ++a;
    return s.substr(a);
}

inline std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

} // namespace detail

// Reads (field, frequency) samples from any CSV with field_t and freq_ghz
// columns. Rows whose optional `stable` column is false are skipped.
inline std::vector<BranchSample> samples_from_csv(const std::string& text) {
    const auto rows = detail::csv_rows(text);
    if (rows.empty()) throw DataError("data file is empty");
    int fcol = -1, vcol = -1, scol = -1;
    for (std::size_t c = 0; c < rows[0].size(); ++c) {
        const auto name = detail::trim(rows[0][c]);
        if (name == "field_t") fcol = static_cast<int>(c);
        if (name == "freq_ghz") vcol = static_cast<int>(c);
        if (name == "stable") scol = static_cast<int>(c);
    }
    if (fcol < 0 || vcol < 0) throw DataError("data header must contain field_t and freq_ghz columns");
    std::vector<BranchSample> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "data row " + std::to_string(r + 1);
        if (row.size() != rows[0].size()) throw DataError(where + ": expected " + std::to_string(rows[0].size()) + " cells");
        if (scol >= 0) {
            const auto s = detail::trim(row[static_cast<std::size_t>(scol)]);
            if (s == "false" || s == "0") continue;
            if (s != "true" && s != "1") throw DataError(where + ": stable must be true or false");
        }
        const double b = parse_number(row[static_cast<std::size_t>(fcol)], where);
        const double f = parse_number(row[static_cast<std::size_t>(vcol)], where);
        if (!std::isfinite(b) || !std::isfinite(f)) throw DataError(where + ": non-finite value");
        out.push_back({b, f});
    }
    return out;
}

inline std::string ridges_csv(const RidgePoints& r) {
    std::ostringstream out;
    out << "field_t,freq_ghz,prominence_db\n";
    for (const auto& p : r.points)
        out << format_number(p.field_t) << ',' << format_number(p.freq_ghz) << ',' << format_number(p.prominence_db) << '\n';
    return out.str();
}

// ---- spectral maps -----------------------------------------------------------

// First header cell is "field_t\freq_ghz", then the frequency axis; each
// following row is a field value and its magnitudes in dB.
inline std::string map_csv(const SpectralMap& map) {
    std::ostringstream out;
    out << "field_t\\freq_ghz";
    for (double f : map.freq_axis_ghz) out << ',' << format_number(f);
    out << '\n';
    for (std::size_t i = 0; i < map.field_axis_t.size(); ++i) {
        out << format_number(map.field_axis_t[i]);
        for (Eigen::Index j = 0; j < map.magnitude_db.cols(); ++j)
            out << ',' << format_number(map.magnitude_db(static_cast<Eigen::Index>(i), j));
        out << '\n';
    }
    return out.str();
}

inline SpectralMap map_from_csv(const std::string& text) {
    const auto rows = detail::csv_rows(text);
    if (rows.size() < 2 || rows[0].size() < 2) throw DataError("map needs a header row and at least one field row");
    SpectralMap map;
    for (std::size_t c = 1; c < rows[0].size(); ++c) map.freq_axis_ghz.push_back(parse_number(rows[0][c], "map header"));
    map.magnitude_db.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(map.freq_axis_ghz.size()));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::string where = "map row " + std::to_string(r + 1);
        if (rows[r].size() != rows[0].size()) throw DataError(where + ": expected " + std::to_string(rows[0].size()) + " cells");
        map.field_axis_t.push_back(parse_number(rows[r][0], where));
        for (std::size_t c = 1; c < rows[r].size(); ++c)
            map.magnitude_db(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) = parse_number(rows[r][c], where);
    }
    try {
        map.validate();
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("map: ") + e.what());
    }
    return map;
}

inline json to_json(const SpectralMap& map) {
    return {{"field_axis_t", map.field_axis_t}, {"freq_axis_ghz", map.freq_axis_ghz}, {"magnitude_db", detail::matrix_json(map.magnitude_db)}};
}

inline SpectralMap map_from_json(const json& j) {
    try {
        detail::check_keys(j, {"field_axis_t", "freq_axis_ghz", "magnitude_db"}, "map");
        SpectralMap map;
        map.field_axis_t = detail::vector(j, "field_axis_t", "map");
        map.freq_axis_ghz = detail::vector(j, "freq_axis_ghz", "map");
        const json& rows = j.at("magnitude_db");
        if (!rows.is_array() || rows.size() != map.field_axis_t.size()) throw DataError("map: magnitude_db must have one row per field");
        map.magnitude_db.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(map.freq_axis_ghz.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!rows[r].is_array() || rows[r].size() != map.freq_axis_ghz.size())
                throw DataError("map: magnitude_db rows must match the frequency axis");
            for (std::size_t c = 0; c < rows[r].size(); ++c) {
                if (!rows[r][c].is_number()) throw DataError("map: magnitude_db must be numeric");
                map.magnitude_db(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
            }
        }
        map.validate();
        return map;
    } catch (const ConfigError& e) {
        throw DataError(e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("map: ") + e.what());
    } catch (const json::exception& e) {
        throw DataError(std::string("map: ") + e.what());
    }
}

// ---- fitting -----------------------------------------------------------------

inline json to_json(const FitProblem& p) {
    json bounds = json::object(), initial = json::object(), data = json::array();
    for (const auto& [k, b] : p.bounds) bounds[k] = {detail::finite_or_null(b.lo), detail::finite_or_null(b.hi)};
    for (const auto& [k, v] : p.initial) initial[k] = v;
    for (const auto& s : p.data) data.push_back({s.field_t, s.freq_ghz});
    return {{"model_kind", to_string(p.kind)},
            {"base_model", to_json(p.base_model)},
            {"magnon", to_json(p.magnon)},
            {"free_params", p.free_params},
            {"bounds", bounds},
            {"initial", initial},
            {"options",
             {{"max_iter", p.options.max_iter},
              {"rel_cost_tol", p.options.rel_cost_tol},
              {"grad_tol", p.options.grad_tol},
              {"jacobian_rel_step", p.options.jacobian_rel_step}}},
            {"data", data}};
}

inline FitProblem fit_problem_from_json(const json& j, const std::string& ctx = "fit_problem") {
    detail::check_keys(j, {"model_kind", "base_model", "magnon", "free_params", "bounds", "initial", "options", "data"}, ctx);
    FitProblem p;
    if (!j.contains("model_kind") || !j.at("model_kind").is_string()) throw ConfigError(ctx + ".model_kind: expected a string");
    try {
        p.kind = model_kind_from_string(j.at("model_kind").get<std::string>());
    } catch (const InvalidArgument& e) {
        throw ConfigError(ctx + ".model_kind: " + e.what());
    }
    if (!j.contains("base_model")) throw ConfigError(ctx + ": missing key 'base_model'");
    p.base_model = model_from_json(j.at("base_model"), ctx + ".base_model");
    if (j.contains("magnon")) {
        const auto& mj = j.at("magnon");
        detail::check_keys(mj, {"gyro_ghz_per_t", "field_offset_t", "linewidth_ghz"}, ctx + ".magnon");
        p.magnon.gyro_ghz_per_t = detail::number_or(mj, "gyro_ghz_per_t", p.magnon.gyro_ghz_per_t, ctx + ".magnon");
        p.magnon.field_offset_t = detail::number_or(mj, "field_offset_t", p.magnon.field_offset_t, ctx + ".magnon");
        p.magnon.linewidth_ghz = detail::number_or(mj, "linewidth_ghz", p.magnon.linewidth_ghz, ctx + ".magnon");
    }
    if (!j.contains("free_params") || !j.at("free_params").is_array()) throw ConfigError(ctx + ".free_params: expected an array");
    for (const auto& s : j.at("free_params")) {
        if (!s.is_string()) throw ConfigError(ctx + ".free_params: expected strings");
        p.free_params.push_back(s.get<std::string>());
    }
    if (j.contains("bounds")) {
        detail::require_object(j.at("bounds"), ctx + ".bounds");
        for (const auto& [k, v] : j.at("bounds").items()) {
            if (!v.is_array() || v.size() != 2) throw ConfigError(ctx + ".bounds." + k + ": expected [lo, hi]");
            Bounds b;
            if (!v[0].is_null()) {
                if (!v[0].is_number()) throw ConfigError(ctx + ".bounds." + k + ": expected numbers or null");
                b.lo = v[0].get<double>();
            }
            if (!v[1].is_null()) {
                if (!v[1].is_number()) throw ConfigError(ctx + ".bounds." + k + ": expected numbers or null");
                b.hi = v[1].get<double>();
            }
            p.bounds[k] = b;
        }
    }
    if (j.contains("initial")) {
        detail::require_object(j.at("initial"), ctx + ".initial");
        for (const auto& [k, v] : j.at("initial").items()) {
            if (!v.is_number()) throw ConfigError(ctx + ".initial." + k + ": expected a number");
            p.initial[k] = v.get<double>();
        }
    }
    if (j.contains("options")) {
        const auto& o = j.at("options");
        const std::string oc = ctx + ".options";
        detail::check_keys(o, {"max_iter", "rel_cost_tol", "grad_tol", "jacobian_rel_step"}, oc);
        if (o.contains("max_iter")) {
            if (!o.at("max_iter").is_number_integer() || o.at("max_iter").get<int>() < 1)
                throw ConfigError(oc + ".max_iter: expected a positive integer");
            p.options.max_iter = o.at("max_iter").get<int>();
        }
        p.options.rel_cost_tol = detail::number_or(o, "rel_cost_tol", p.options.rel_cost_tol, oc);
        p.options.grad_tol = detail::number_or(o, "grad_tol", p.options.grad_tol, oc);
        p.options.jacobian_rel_step = detail::number_or(o, "jacobian_rel_step", p.options.jacobian_rel_step, oc);
    }
    if (j.contains("data")) {
        if (!j.at("data").is_array()) throw ConfigError(ctx + ".data: expected an array of [field_t, freq_ghz]");
        for (const auto& s : j.at("data")) {
            if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
                throw ConfigError(ctx + ".data: expected an array of [field_t, freq_ghz]");
            p.data.push_back({s[0].get<double>(), s[1].get<double>()});
        }
    }
    return p;
}

inline json to_json(const FitResult& r) {
    json params = json::object(), sd = json::object();
    for (std::size_t i = 0; i < r.param_names.size(); ++i) {
        params[r.param_names[i]] = r.params[i];
        sd[r.param_names[i]] = r.stddev(r.param_names[i]);
    }
    return {{"param_names", r.param_names},
            {"params", params},
            {"stddev", sd},
            {"covariance", detail::matrix_json(r.covariance)},
            {"residual_rms_ghz", r.residual_rms},
            {"n_iter", r.n_iter},
            {"converged", r.converged},
            {"message", r.message},
            {"rejected_unstable_steps", r.rejected_unstable},
            {"model", to_json(r.model)},
            {"magnon", to_json(r.magnon)},
            {"n_samples", r.residuals_ghz.size()}};
}

// ---- regime ------------------------------------------------------------------

inline json to_json(const RegimeFlags& f) {
    return {{"strong", f.strong}, {"ultrastrong", f.ultrastrong}, {"superstrong", f.superstrong}};
}

inline json to_json(const RegimeReport& r) {
    json pairs = json::array();
    for (const auto& p : r.pairs)
        pairs.push_back({{"photon_index", p.photon_index},
                         {"mode_freq_ghz", p.mode_freq_ghz},
                         {"g_ordinary_ghz", p.g_ordinary_ghz},
                         {"g_over_pi_ghz", p.g_over_pi_ghz},
                         {"fsr_ghz", detail::finite_or_null(p.fsr_ghz)},
                         {"magnon_linewidth_ghz", p.magnon_linewidth_ghz},
                         {"photon_linewidth_ghz", p.photon_linewidth_ghz},
                         {"ordinary", to_json(p.ordinary)},
                         {"over_pi", to_json(p.over_pi)}});
    return {{"ultrastrong_threshold", r.ultrastrong_threshold},
            {"ordinary", to_json(r.ordinary)},
            {"over_pi", to_json(r.over_pi)},
            {"pairs", pairs}};
}

} // namespace magnon_hybrid::io
