#pragma once

// Coupling-regime classification of photon-magnon pairs.
//
//   strong       g > Gamma and g > delta_i
//   ultrastrong  g / omega_i >= threshold (0.1 by default)
//   superstrong  g >= FSR seen by mode i
//
// Couplings are evaluated under two readings because published values are
// sometimes quoted as g/pi rather than g/2pi: the ordinary-frequency coupling
// and the same number expressed in the g/pi convention (twice as large).

#include "magnon_hybrid/cavity_network.hpp"
#include "magnon_hybrid/errors.hpp"
#include "magnon_hybrid/quadratic_hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <variant>
#include <vector>

namespace magnon_hybrid {

enum class CouplingConvention {
    Ordinary,  // value is g/2pi
    OverPi,    // value is g/pi, i.e. twice the ordinary-frequency coupling
};

struct RegimeThresholds {
    double ultrastrong_ratio = 0.1;
};

struct RegimeFlags {
    bool strong = false;
    bool ultrastrong = false;
    bool superstrong = false;
};

struct CoupledPair {
    std::size_t photon_index = 0;
    double mode_freq_ghz = 0.0;
    double g_ordinary_ghz = 0.0;
    double g_over_pi_ghz = 0.0;  // same coupling in the g/pi convention
    double fsr_ghz = std::numeric_limits<double>::infinity();  // infinite when no neighbouring mode
    double magnon_linewidth_ghz = 0.0;
    double photon_linewidth_ghz = 0.0;
    RegimeFlags ordinary;
    RegimeFlags over_pi;
};

struct RegimeReport {
    std::vector<CoupledPair> pairs;
    RegimeFlags ordinary;  // any pair
    RegimeFlags over_pi;
    double ultrastrong_threshold = 0.1;
};

struct RegimeInput {
    std::vector<double> mode_freq_ghz;
    std::vector<double> coupling_ghz;  // in `convention`
    CouplingConvention convention = CouplingConvention::Ordinary;
    std::vector<double> photon_linewidth_ghz;
    double magnon_linewidth_ghz = 0.0;
};

// Where the free spectral range comes from: derived from the coupled modes
// themselves (monostate), one explicit value, or a solved cavity spectrum.
using FsrSource = std::variant<std::monostate, double, ModeSpectrum>;

namespace detail {

inline bool distinct(double a, double b) { return std::abs(a - b) > 1e-9 * std::max(std::abs(a), std::abs(b)); }

inline double fsr_from_coupled(const RegimeInput& in, std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < in.mode_freq_ghz.size(); ++j) {
        if (j == i || in.coupling_ghz[j] == 0.0) continue;
        if (!distinct(in.mode_freq_ghz[i], in.mode_freq_ghz[j])) continue;
        best = std::min(best, std::abs(in.mode_freq_ghz[i] - in.mode_freq_ghz[j]));
    }
    return best;
}

inline double fsr_from_spectrum(const ModeSpectrum& spec, double freq) {
    if (spec.modes.empty()) return std::numeric_limits<double>::infinity();
    std::size_t near = 0;
    for (std::size_t k = 1; k < spec.modes.size(); ++k)
        if (std::abs(spec.modes[k].frequency_ghz - freq) < std::abs(spec.modes[near].frequency_ghz - freq)) near = k;
    const double f0 = spec.modes[near].frequency_ghz;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : spec.modes)
        if (distinct(m.frequency_ghz, f0)) best = std::min(best, std::abs(m.frequency_ghz - f0));
    return best;
}

inline RegimeFlags flags_for(double g, const CoupledPair& p, double threshold) {
    RegimeFlags f;
    f.strong = g > p.magnon_linewidth_ghz && g > p.photon_linewidth_ghz;
    f.ultrastrong = g / p.mode_freq_ghz >= threshold;
    f.superstrong = std::isfinite(p.fsr_ghz) && g >= p.fsr_ghz;
    return f;
}

inline void merge(RegimeFlags& acc, const RegimeFlags& f) {
    acc.strong = acc.strong || f.strong;
    acc.ultrastrong = acc.ultrastrong || f.ultrastrong;
    acc.superstrong = acc.superstrong || f.superstrong;
}

} // namespace detail

inline RegimeReport classify(const RegimeInput& in, const FsrSource& fsr = {}, const RegimeThresholds& thr = {}) {
    const std::size_t n = in.mode_freq_ghz.size();
    if (in.coupling_ghz.size() != n) throw InvalidArgument("one coupling per mode frequency required");
    if (!in.photon_linewidth_ghz.empty() && in.photon_linewidth_ghz.size() != n)
        throw InvalidArgument("one photon linewidth per mode required");
    for (double f : in.mode_freq_ghz)
        if (!(f > 0.0)) throw InvalidArgument("mode frequencies must be positive");
    for (double d : in.photon_linewidth_ghz)
        if (!(d >= 0.0)) throw InvalidArgument("linewidths must be non-negative");
    if (!(in.magnon_linewidth_ghz >= 0.0)) throw InvalidArgument("linewidths must be non-negative");
    if (!(thr.ultrastrong_ratio > 0.0)) throw InvalidArgument("ultrastrong threshold must be positive");
    if (const double* x = std::get_if<double>(&fsr); x && !(*x > 0.0)) throw InvalidArgument("FSR must be positive");

    RegimeReport report;
    report.ultrastrong_threshold = thr.ultrastrong_ratio;
    for (std::size_t i = 0; i < n; ++i) {
        const double given = std::abs(in.coupling_ghz[i]);
        if (given == 0.0) continue;
        CoupledPair p;
        p.photon_index = i;
        p.mode_freq_ghz = in.mode_freq_ghz[i];
        p.g_ordinary_ghz = in.convention == CouplingConvention::OverPi ? 0.5 * given : given;
        p.g_over_pi_ghz = 2.0 * p.g_ordinary_ghz;
        p.magnon_linewidth_ghz = in.magnon_linewidth_ghz;
        p.photon_linewidth_ghz = in.photon_linewidth_ghz.empty() ? 0.0 : in.photon_linewidth_ghz[i];
        if (const double* x = std::get_if<double>(&fsr)) p.fsr_ghz = *x;
        else if (const auto* spec = std::get_if<ModeSpectrum>(&fsr)) p.fsr_ghz = detail::fsr_from_spectrum(*spec, p.mode_freq_ghz);
        else p.fsr_ghz = detail::fsr_from_coupled(in, i);
        p.ordinary = detail::flags_for(p.g_ordinary_ghz, p, thr.ultrastrong_ratio);
        p.over_pi = detail::flags_for(p.g_over_pi_ghz, p, thr.ultrastrong_ratio);
        detail::merge(report.ordinary, p.ordinary);
        detail::merge(report.over_pi, p.over_pi);
        report.pairs.push_back(p);
    }
    return report;
}

// Classification of a model whose couplings are ordinary frequencies (e.g. a fit result).
inline RegimeReport classify(const HybridModel& model, const FsrSource& fsr = {}, const RegimeThresholds& thr = {}) {
    model.validate_structure();
    RegimeInput in;
    in.mode_freq_ghz = model.photon_freq_ghz;
    in.coupling_ghz = model.magnon_coupling_ghz;
    in.convention = CouplingConvention::Ordinary;
    in.photon_linewidth_ghz = model.photon_linewidth_ghz;
    in.magnon_linewidth_ghz = model.magnon_linewidth_ghz;
    return classify(in, fsr, thr);
}

} // namespace magnon_hybrid
