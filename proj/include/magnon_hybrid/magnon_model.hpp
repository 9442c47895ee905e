#pragma once

// Uniform (Kittel) magnon mode of a magnetised sphere and the collective
// spin-photon coupling of a spin ensemble.

#include "magnon_hybrid/errors.hpp"

#include <cmath>
#include <numbers>

namespace magnon_hybrid {

namespace constants {
inline constexpr double mu0 = 1.25663706212e-6;     // T m / A
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double default_gyro_ghz_per_t = 28.0;
} // namespace constants

struct MagnonMode {
    double gyro_ghz_per_t = constants::default_gyro_ghz_per_t;
    double field_offset_t = 0.0;
    double linewidth_ghz = 0.0;  // full width

    void validate() const {
        if (!(gyro_ghz_per_t > 0.0)) throw InvalidArgument("gyromagnetic ratio must be positive");
        if (!(linewidth_ghz >= 0.0)) throw InvalidArgument("magnon linewidth must be non-negative");
        if (!std::isfinite(field_offset_t)) throw InvalidArgument("field offset must be finite");
    }
};

struct SpinEnsemble {
    double spin_density_per_m3 = 2e28;
    double spin_quantum = 2.5;
    double sphere_diameter_m = 0.0;  // informational; the coupling depends on the filling factor only
    double filling_factor = 1.0;

    void validate(bool require_filling = true) const {
        if (!(spin_density_per_m3 > 0.0)) throw InvalidArgument("spin density must be positive");
        if (!(spin_quantum > 0.0)) throw InvalidArgument("spin quantum number must be positive");
        if (!(sphere_diameter_m >= 0.0)) throw InvalidArgument("sphere diameter must be non-negative");
        if (require_filling && !(filling_factor > 0.0 && filling_factor <= 1.0))
            throw InvalidArgument("filling factor must lie in (0, 1]");
    }
};

// Linear Kittel law: f = gyro * (B - B_offset).
inline double magnon_frequency(const MagnonMode& mode, double field_t) {
    mode.validate();
    if (field_t < mode.field_offset_t)
        throw InvalidArgument("field below magnon field offset gives a negative frequency");
    return mode.gyro_ghz_per_t * (field_t - mode.field_offset_t);
}

// Field at which the magnon reaches a given frequency.
inline double resonance_field(const MagnonMode& mode, double freq_ghz) {
    mode.validate();
    return mode.field_offset_t + freq_ghz / mode.gyro_ghz_per_t;
}

namespace detail {

// g^2 / xi in GHz^2 for the collective coupling
//   g = (gamma/2) sqrt(2 s mu0 hbar omega_c n_s xi) / (2 pi)
inline double coupling_sq_per_filling(const SpinEnsemble& ens, double cavity_freq_ghz, double gyro_ghz_per_t) {
    const double two_pi = 2.0 * std::numbers::pi;
    const double gamma_rad = two_pi * gyro_ghz_per_t * 1e9;
    const double omega_c = two_pi * cavity_freq_ghz * 1e9;
    const double root_arg = 2.0 * ens.spin_quantum * constants::mu0 * constants::hbar * omega_c * ens.spin_density_per_m3;
    const double g_hz = 0.5 * gamma_rad / two_pi;  // times sqrt(root_arg * xi)
    return g_hz * g_hz * root_arg * 1e-18;
}

inline void check_estimator_inputs(double cavity_freq_ghz, double gyro_ghz_per_t) {
    if (!(cavity_freq_ghz > 0.0)) throw InvalidArgument("cavity frequency must be positive");
    if (!(gyro_ghz_per_t > 0.0)) throw InvalidArgument("gyromagnetic ratio must be positive");
}

} // namespace detail

// Collective coupling (GHz, ordinary frequency) of the ensemble to a cavity mode.
inline double estimate_coupling(const SpinEnsemble& ensemble, double cavity_freq_ghz,
                                double gyro_ghz_per_t = constants::default_gyro_ghz_per_t) {
    ensemble.validate();
    detail::check_estimator_inputs(cavity_freq_ghz, gyro_ghz_per_t);
    return std::sqrt(detail::coupling_sq_per_filling(ensemble, cavity_freq_ghz, gyro_ghz_per_t) *
                     ensemble.filling_factor);
}

// Filling factor that reproduces a measured coupling; ensemble.filling_factor is ignored.
inline double estimate_filling(double coupling_ghz, const SpinEnsemble& ensemble, double cavity_freq_ghz,
                               double gyro_ghz_per_t = constants::default_gyro_ghz_per_t) {
    if (!(coupling_ghz > 0.0)) throw InvalidArgument("coupling must be positive");
    ensemble.validate(false);
    detail::check_estimator_inputs(cavity_freq_ghz, gyro_ghz_per_t);
    return coupling_ghz * coupling_ghz / detail::coupling_sq_per_filling(ensemble, cavity_freq_ghz, gyro_ghz_per_t);
}

} // namespace magnon_hybrid
