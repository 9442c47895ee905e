#pragma once

// N photon modes plus one magnon mode with position-position couplings,
//
//   H = sum_i w_i a_i^+ a_i + sum_{i<j} G_ij (a_i^+ + a_i)(a_j^+ + a_j)
//     + w_m b^+ b + sum_i g_i (a_i^+ + a_i)(b^+ + b),
//
// counter-rotating terms included. Every frequency and coupling is an
// ordinary frequency in GHz; the spectrum is invariant under a common rescaling
// so no 2*pi factors appear. Mode index N is the magnon.

#include "magnon_hybrid/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace magnon_hybrid {

struct HybridModel {
    std::vector<double> photon_freq_ghz;
    Eigen::MatrixXd photon_coupling_ghz;  // symmetric, zero diagonal
    double magnon_freq_ghz = 0.0;
    std::vector<double> magnon_coupling_ghz;
    std::vector<double> photon_linewidth_ghz;
    double magnon_linewidth_ghz = 0.0;

    std::size_t n_photons() const { return photon_freq_ghz.size(); }
    std::size_t n_modes() const { return photon_freq_ghz.size() + 1; }

    // Structural checks only; frequency positivity is checked separately so a
    // sweep can report a zero magnon frequency as an unstable point.
    void validate_structure() const {
        const auto n = photon_freq_ghz.size();
        if (n == 0) throw InvalidArgument("model needs at least one photon mode");
        if (magnon_coupling_ghz.size() != n || photon_linewidth_ghz.size() != n)
            throw InvalidArgument("photon_freq, magnon_coupling and photon_linewidth must have equal length");
        const auto ni = static_cast<Eigen::Index>(n);
        if (photon_coupling_ghz.rows() != ni || photon_coupling_ghz.cols() != ni)
            throw InvalidArgument("photon_coupling must be N x N");
        for (Eigen::Index i = 0; i < ni; ++i) {
            if (photon_coupling_ghz(i, i) != 0.0) throw InvalidArgument("photon_coupling diagonal must be zero");
            for (Eigen::Index j = i + 1; j < ni; ++j)
                if (photon_coupling_ghz(i, j) != photon_coupling_ghz(j, i))
                    throw InvalidArgument("photon_coupling must be symmetric");
        }
        for (double x : photon_linewidth_ghz)
            if (!(x >= 0.0)) throw InvalidArgument("linewidths must be non-negative");
        if (!(magnon_linewidth_ghz >= 0.0)) throw InvalidArgument("linewidths must be non-negative");
        for (double x : magnon_coupling_ghz)
            if (!std::isfinite(x)) throw InvalidArgument("couplings must be finite");
        if (!photon_coupling_ghz.allFinite()) throw InvalidArgument("couplings must be finite");
    }

    void validate() const {
        validate_structure();
        for (double f : photon_freq_ghz)
            if (!(f > 0.0) || !std::isfinite(f)) throw InvalidArgument("photon frequencies must be positive");
        if (!(magnon_freq_ghz > 0.0) || !std::isfinite(magnon_freq_ghz))
            throw InvalidArgument("magnon frequency must be positive");
    }
};

struct PolaritonSet {
    std::vector<double> frequencies_ghz;  // ascending
    Eigen::MatrixXd fractions;            // row k: composition of mode k over (photons..., magnon)
    bool stable = true;
    std::string diagnosis;                // empty when stable
    std::vector<std::size_t> offending_modes;

    std::size_t size() const { return frequencies_ghz.size(); }
    double magnon_fraction(std::size_t k) const {
        return fractions(static_cast<Eigen::Index>(k), fractions.cols() - 1);
    }
    double photon_fraction(std::size_t k) const { return 1.0 - magnon_fraction(k); }
};

// Eq. (1)-type model: degenerate doublet (R = mode 0, L = mode 1), magnon coupled to R only.
inline HybridModel build_n4(double omega_c, double g_rl, double g, double omega_m) {
    if (!(omega_c > 0.0) || !(omega_m > 0.0)) throw InvalidArgument("build_n4 needs positive frequencies");
    HybridModel m;
    m.photon_freq_ghz = {omega_c, omega_c};
    m.photon_coupling_ghz = Eigen::MatrixXd::Zero(2, 2);
    m.photon_coupling_ghz(0, 1) = m.photon_coupling_ghz(1, 0) = g_rl;
    m.magnon_freq_ghz = omega_m;
    m.magnon_coupling_ghz = {g, 0.0};
    m.photon_linewidth_ghz = {0.0, 0.0};
    return m;
}

// Eq. (2)-type model: three uncoupled cavity modes, each coupled to the magnon.
inline HybridModel build_n8(double omega_c1, double omega_c2, double omega_c3, double g1, double g2, double g3,
                            double omega_m) {
    if (!(omega_c1 > 0.0) || !(omega_c2 > 0.0) || !(omega_c3 > 0.0) || !(omega_m > 0.0))
        throw InvalidArgument("build_n8 needs positive frequencies");
    HybridModel m;
    m.photon_freq_ghz = {omega_c1, omega_c2, omega_c3};
    m.photon_coupling_ghz = Eigen::MatrixXd::Zero(3, 3);
    m.magnon_freq_ghz = omega_m;
    m.magnon_coupling_ghz = {g1, g2, g3};
    m.photon_linewidth_ghz = {0.0, 0.0, 0.0};
    return m;
}

// Symmetric (N+1)x(N+1) position-position coupling matrix, zero diagonal.
inline Eigen::MatrixXd coupling_matrix(const HybridModel& model) {
    const auto n = static_cast<Eigen::Index>(model.n_photons());
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + 1, n + 1);
    k.topLeftCorner(n, n) = model.photon_coupling_ghz;
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, n) = model.magnon_coupling_ghz[static_cast<std::size_t>(i)];
        k(n, i) = k(i, n);
    }
    return k;
}

inline Eigen::VectorXd bare_frequencies(const HybridModel& model) {
    const auto n = static_cast<Eigen::Index>(model.n_photons());
    Eigen::VectorXd w(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = model.photon_freq_ghz[static_cast<std::size_t>(i)];
    w(n) = model.magnon_freq_ghz;
    return w;
}

// Bogoliubov matrix M in the basis (a_0..a_N, a_0^+..a_N^+), H = 1/2 alpha^+ M alpha + const.
inline Eigen::MatrixXd bogoliubov_matrix(const HybridModel& model) {
    model.validate_structure();
    const Eigen::MatrixXd k = coupling_matrix(model);
    const Eigen::Index n = k.rows();
    Eigen::MatrixXd a = k;
    a.diagonal() = bare_frequencies(model);
    Eigen::MatrixXd m(2 * n, 2 * n);
    m << a, k, k, a;
    return m;
}

// sigma_z M; its eigenvalues come in +/- pairs.
inline Eigen::MatrixXd dynamical_matrix(const HybridModel& model) {
    Eigen::MatrixXd d = bogoliubov_matrix(model);
    const Eigen::Index n = d.rows() / 2;
    d.bottomRows(n) *= -1.0;
    return d;
}

namespace detail {

inline constexpr double real_eig_tol = 1e-8;
inline constexpr double near_singular_tol = 1e-10;
inline constexpr double tie_rel_tol = 1e-12;

inline void sort_modes(std::vector<double>& freqs, Eigen::MatrixXd& fractions) {
    const auto n = freqs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto last = fractions.cols() - 1;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double fa = freqs[a], fb = freqs[b];
        if (std::abs(fa - fb) <= tie_rel_tol * std::max(std::abs(fa), std::abs(fb)))
            return fractions(static_cast<Eigen::Index>(a), last) > fractions(static_cast<Eigen::Index>(b), last);
        return fa < fb;
    });
    std::vector<double> f2(n);
    Eigen::MatrixXd fr2(fractions.rows(), fractions.cols());
    for (std::size_t r = 0; r < n; ++r) {
        f2[r] = freqs[order[r]];
        fr2.row(static_cast<Eigen::Index>(r)) = fractions.row(static_cast<Eigen::Index>(order[r]));
    }
    freqs = std::move(f2);
    fractions = std::move(fr2);
}

// Composition weights from a symplectic eigenvector (u; v).
template <typename Vec>
Eigen::RowVectorXd composition(const Vec& t, Eigen::Index n) {
    Eigen::RowVectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = std::norm(std::complex<double>(t(i))) + std::norm(std::complex<double>(t(i + n)));
    const double s = w.sum();
    return s > 0.0 ? Eigen::RowVectorXd(w / s) : w;
}

inline PolaritonSet unstable_result(const Eigen::VectorXd& soft_dir, double min_eig, std::size_t n_photons) {
    PolaritonSet out;
    out.stable = false;
    const double peak = soft_dir.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < soft_dir.size(); ++i)
        if (std::abs(soft_dir(i)) >= 0.25 * peak) out.offending_modes.push_back(static_cast<std::size_t>(i));
    std::string names;
    for (std::size_t i : out.offending_modes) {
        if (!names.empty()) names += ", ";
        names += i == n_photons ? std::string("magnon") : "photon " + std::to_string(i);
    }
    out.diagnosis = "Hamiltonian not bounded below: quadrature form eigenvalue " + std::to_string(min_eig) +
                    " <= 0 along modes {" + names + "}";
    return out;
}

// Colpa's Cholesky route for a positive-definite Bogoliubov matrix.
inline PolaritonSet colpa(const Eigen::MatrixXd& m, Eigen::Index n) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    Eigen::MatrixXd upper = llt.matrixU();  // m = U^T U, K = U
    Eigen::MatrixXd w = upper;
    w.rightCols(n) *= -1.0;                  // K sigma
    w = (w * upper.transpose()).eval();      // K sigma K^T
    w = 0.5 * (w + w.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w);

    PolaritonSet out;
    out.frequencies_ghz.resize(static_cast<std::size_t>(n));
    out.fractions.resize(n, n);
    const auto tri = llt.matrixU();
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index col = n + k;  // positive half, ascending
        const double lambda = es.eigenvalues()(col);
        Eigen::VectorXd t = tri.solve(es.eigenvectors().col(col)) * std::sqrt(lambda);
        out.frequencies_ghz[static_cast<std::size_t>(k)] = lambda;
        out.fractions.row(k) = composition(t, n);
    }
    return out;
}

// General eigensolve of the dynamical matrix with explicit +/- pairing.
inline PolaritonSet paired_eigensolve(const Eigen::MatrixXd& m, Eigen::Index n) {
    Eigen::MatrixXd d = m;
    d.bottomRows(n) *= -1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(d);
    PolaritonSet out;
    std::vector<Eigen::RowVectorXd> rows;
    for (Eigen::Index k = 0; k < 2 * n; ++k) {
        const std::complex<double> ev = es.eigenvalues()(k);
        if (std::abs(ev.imag()) > real_eig_tol * std::abs(ev.real())) {
            out.stable = false;
            continue;
        }
        if (ev.real() <= 0.0) continue;
        Eigen::VectorXcd t = es.eigenvectors().col(k);
        double norm = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) norm += std::norm(t(i)) - std::norm(t(i + n));
        if (norm <= 0.0) {
            out.stable = false;
            continue;
        }
        out.frequencies_ghz.push_back(ev.real());
        rows.push_back(composition(t / std::sqrt(norm), n));
    }
    if (static_cast<Eigen::Index>(out.frequencies_ghz.size()) != n) out.stable = false;
    out.fractions.resize(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t r = 0; r < rows.size(); ++r) out.fractions.row(static_cast<Eigen::Index>(r)) = rows[r];
    if (!out.stable) out.diagnosis = "dynamical matrix has non-real or unpaired eigenvalues";
    return out;
}

} // namespace detail

// Normal modes of the full Hamiltonian. Never throws on instability; instead
// returns stable = false with a diagnosis naming the softest modes.
inline PolaritonSet solve_polaritons(const HybridModel& model) {
    model.validate_structure();
    for (double f : model.photon_freq_ghz)
        if (!(f > 0.0)) throw InvalidArgument("photon frequencies must be positive");
    const auto n = static_cast<Eigen::Index>(model.n_modes());

    // The momentum quadrature block is diag(w); the position block is diag(w) + 2K.
    Eigen::MatrixXd quad = 2.0 * coupling_matrix(model);
    quad.diagonal() = bare_frequencies(model);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qs(quad);
    const double min_x = qs.eigenvalues()(0);
    const double max_x = qs.eigenvalues().cwiseAbs().maxCoeff();
    if (!(model.magnon_freq_ghz > 0.0)) {
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
        dir(n - 1) = 1.0;
        return detail::unstable_result(dir, model.magnon_freq_ghz, model.n_photons());
    }
    if (!(min_x > 0.0)) return detail::unstable_result(qs.eigenvectors().col(0), min_x, model.n_photons());

    const Eigen::MatrixXd m = bogoliubov_matrix(model);
    PolaritonSet out = min_x < detail::near_singular_tol * max_x ? detail::paired_eigensolve(m, n) : detail::colpa(m, n);
    if (out.stable) detail::sort_modes(out.frequencies_ghz, out.fractions);
    return out;
}

// Same as solve_polaritons but raises Instability for unbounded Hamiltonians.
inline PolaritonSet eigen_full(const HybridModel& model) {
    model.validate();
    PolaritonSet out = solve_polaritons(model);
    if (!out.stable) throw Instability(out.diagnosis, out.offending_modes);
    return out;
}

// Rotating-wave approximation: single-excitation Hermitian matrix.
inline PolaritonSet eigen_rwa(const HybridModel& model) {
    model.validate();
    Eigen::MatrixXd h = coupling_matrix(model);
    h.diagonal() = bare_frequencies(model);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    PolaritonSet out;
    const Eigen::Index n = h.rows();
    out.frequencies_ghz.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
    out.fractions = es.eigenvectors().transpose().cwiseAbs2();
    detail::sort_modes(out.frequencies_ghz, out.fractions);
    return out;
}

} // namespace magnon_hybrid
