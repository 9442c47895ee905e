#pragma once

// Lumped model of a multi-post reentrant cavity: every post is a harmonic
// oscillator, posts couple through a symmetric matrix acting on squared
// frequencies. Mode frequencies are the square roots of the eigenvalues of
//
//     M_ii = post_freq_i^2,   M_ij = coupling_ij   (i != j)
//
// and eigenvectors are the relative post currents of each mode.

#include "magnon_hybrid/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace magnon_hybrid {

// A pattern component below this fraction of the largest one is labeled "0".
inline constexpr double pattern_zero_tol = 0.05;

// Eigenvalues closer than this (relative to the largest) form a degenerate multiplet.
inline constexpr double degeneracy_rel_tol = 1e-10;

struct CavityNetwork {
    std::vector<double> post_freq_ghz;
    Eigen::MatrixXd coupling;  // GHz^2, symmetric, zero diagonal

    std::size_t n_posts() const { return post_freq_ghz.size(); }

    void validate() const {
        const auto n = static_cast<Eigen::Index>(post_freq_ghz.size());
        if (n == 0) throw InvalidArgument("cavity network needs at least one post");
        if (coupling.rows() != n || coupling.cols() != n)
            throw InvalidArgument("coupling matrix must be n_posts x n_posts");
        for (double f : post_freq_ghz)
            if (!(f > 0.0) || !std::isfinite(f))
                throw InvalidArgument("post frequencies must be finite and strictly positive");
        const double scale = std::max(1.0, coupling.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < n; ++i) {
            if (coupling(i, i) != 0.0) throw InvalidArgument("coupling diagonal must be exactly zero");
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (!std::isfinite(coupling(i, j)))
                    throw InvalidArgument("coupling entries must be finite");
                if (std::abs(coupling(i, j) - coupling(j, i)) > 1e-12 * scale)
                    throw InvalidArgument("coupling matrix must be symmetric");
            }
        }
    }
};

struct CavityMode {
    double frequency_ghz = 0.0;
    Eigen::VectorXd pattern;  // unit norm, first non-negligible entry positive
    std::string label;        // one of "↑", "↓", "0" per post
    bool degenerate = false;  // member of a degenerate multiplet
};

struct ModeSpectrum {
    std::vector<CavityMode> modes;    // ascending frequency
    std::vector<double> fsr_list_ghz; // modes[k+1] - modes[k]
};

inline constexpr const char* current_up = "↑";
inline constexpr const char* current_down = "↓";

namespace detail {

// Rank of each label symbol: ↑ < 0 < ↓. Used for ordering degenerate modes.
inline std::vector<int> pattern_signs(const Eigen::VectorXd& pattern, double zero_tol = pattern_zero_tol) {
    const double peak = pattern.cwiseAbs().maxCoeff();
    std::vector<int> signs(static_cast<std::size_t>(pattern.size()), 0);
    for (Eigen::Index i = 0; i < pattern.size(); ++i) {
        if (std::abs(pattern(i)) < zero_tol * peak) continue;
        signs[static_cast<std::size_t>(i)] = pattern(i) > 0.0 ? 1 : -1;
    }
    return signs;
}

inline void fix_sign(Eigen::VectorXd& v) {
    const double peak = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) >= pattern_zero_tol * peak) {
            if (v(i) < 0.0) v = -v;
            return;
        }
    }
}

// Rotate an orthonormal basis Q of a degenerate subspace so the first vector
// carries the largest possible component on post 0, the next one on the
// lowest-index post still reachable, and so on.
inline Eigen::MatrixXd gauge_degenerate(const Eigen::MatrixXd& Q) {
    const Eigen::Index n = Q.rows();
    const Eigen::Index k = Q.cols();
    Eigen::MatrixXd out(n, k);
    Eigen::Index filled = 0;
    for (Eigen::Index post = 0; post < n && filled < k; ++post) {
        Eigen::VectorXd v = Q * Q.row(post).transpose();
        for (Eigen::Index c = 0; c < filled; ++c) v -= out.col(c).dot(v) * out.col(c);
        const double norm = v.norm();
        if (norm < 1e-6) continue;
        out.col(filled++) = v / norm;
    }
    // Unreachable for an orthonormal Q, kept so the result always has k columns.
    for (Eigen::Index c = filled; c < k; ++c) out.col(c) = Q.col(c);
    return out;
}

} // namespace detail

inline std::string pattern_label(const Eigen::VectorXd& pattern, double zero_tol = pattern_zero_tol) {
    std::string label;
    for (int s : detail::pattern_signs(pattern, zero_tol))
        label += s > 0 ? current_up : (s < 0 ? current_down : "0");
    return label;
}

// Number of symbols (posts) in a UTF-8 label.
inline std::size_t label_length(const std::string& label) {
    return static_cast<std::size_t>(std::count_if(label.begin(), label.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

inline ModeSpectrum solve_modes(const CavityNetwork& network) {
    network.validate();
    const auto n = static_cast<Eigen::Index>(network.n_posts());

    Eigen::MatrixXd m = network.coupling;
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) = network.post_freq_ghz[static_cast<std::size_t>(i)] *
                                                    network.post_freq_ghz[static_cast<std::size_t>(i)];

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NonPhysical("eigensolver failed on cavity network");
    const Eigen::VectorXd& evals = es.eigenvalues();
    Eigen::MatrixXd evecs = es.eigenvectors();

    if (evals(0) <= 0.0)
        throw NonPhysical("overcoupled network: squared mode frequency " + std::to_string(evals(0)) + " <= 0");

    const double scale = evals.cwiseAbs().maxCoeff();
    ModeSpectrum spectrum;
    spectrum.modes.reserve(static_cast<std::size_t>(n));

    for (Eigen::Index start = 0; start < n;) {
        Eigen::Index stop = start + 1;
        while (stop < n && evals(stop) - evals(stop - 1) <= degeneracy_rel_tol * scale) ++stop;
        const Eigen::Index k = stop - start;

        Eigen::MatrixXd block = evecs.middleCols(start, k);
        double eig = evals(start);
        if (k > 1) {
            block = detail::gauge_degenerate(block);
            eig = evals.segment(start, k).mean();
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            CavityMode mode;
            mode.frequency_ghz = std::sqrt(eig);
            mode.pattern = block.col(c).normalized();
            detail::fix_sign(mode.pattern);
            mode.label = pattern_label(mode.pattern);
            mode.degenerate = k > 1;
            spectrum.modes.push_back(std::move(mode));
        }
        start = stop;
    }

    auto rank = [](const CavityMode& mode) {
        auto signs = detail::pattern_signs(mode.pattern);
        for (int& s : signs) s = 1 - s;  // ↑ -> 0, 0 -> 1, ↓ -> 2
        return signs;
    };
    std::stable_sort(spectrum.modes.begin(), spectrum.modes.end(), [&](const CavityMode& a, const CavityMode& b) {
        if (a.frequency_ghz != b.frequency_ghz) return a.frequency_ghz < b.frequency_ghz;
        return rank(a) < rank(b);
    });

    for (std::size_t i = 0; i + 1 < spectrum.modes.size(); ++i)
        spectrum.fsr_list_ghz.push_back(spectrum.modes[i + 1].frequency_ghz - spectrum.modes[i].frequency_ghz);
    return spectrum;
}

// D_n-symmetric ring of identical posts with nearest-neighbour coupling.
inline CavityNetwork ring_network(int n, double omega0_ghz, double kappa) {
    if (n < 2) throw InvalidArgument("ring_network needs n >= 2");
    if (!(omega0_ghz > 0.0)) throw InvalidArgument("ring_network needs omega0 > 0");
    CavityNetwork net;
    net.post_freq_ghz.assign(static_cast<std::size_t>(n), omega0_ghz);
    net.coupling = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        net.coupling(i, j) = kappa;
        net.coupling(j, i) = kappa;
    }
    return net;
}

// Two perpendicular four-post chains (posts 0-3 form chain alpha, 4-7 chain
// beta) crossing at the cavity centre. The inner posts of each chain (1, 2 and
// 5, 6) sit equidistant from the inner posts of the other chain and couple to
// all of them with kappa_cross. Modes antisymmetric about the centre stay
// degenerate under this D4 arrangement; symmetric ones split.
inline CavityNetwork double_chain_network(double omega0_ghz, double kappa_chain, double kappa_cross) {
    if (!(omega0_ghz > 0.0)) throw InvalidArgument("double_chain_network needs omega0 > 0");
    CavityNetwork net;
    net.post_freq_ghz.assign(8, omega0_ghz);
    net.coupling = Eigen::MatrixXd::Zero(8, 8);
    auto link = [&](int i, int j, double k) {
        net.coupling(i, j) = k;
        net.coupling(j, i) = k;
    };
    for (int chain = 0; chain < 2; ++chain)
        for (int i = 0; i < 3; ++i) link(4 * chain + i, 4 * chain + i + 1, kappa_chain);
    for (int a : {1, 2})
        for (int b : {5, 6}) link(a, b, kappa_cross);
    return net;
}

// "α↑↑↓↓β0000" style label for an eight-post double-chain mode.
inline std::string double_chain_label(const CavityMode& mode) {
    if (mode.pattern.size() != 8) throw InvalidArgument("double_chain_label needs an 8-post mode");
    const auto signs = detail::pattern_signs(mode.pattern);
    std::string out = "α";
    for (std::size_t i = 0; i < 8; ++i) {
        if (i == 4) out += "β";
        out += signs[i] > 0 ? current_up : (signs[i] < 0 ? current_down : "0");
    }
    return out;
}

struct WgmOrder {
    int node_count = 0;       // sign changes around the ring
    int order = 0;            // discrete-WGM order as labeled for the doublet: equals node_count
    int azimuthal_index = 0;  // node_count / 2, the number of full current periods
};

// Count current nodes going around the ring in the given post order. Posts
// labeled "0" inherit the sign of the preceding non-zero post.
inline WgmOrder wgm_order(const CavityMode& mode, const std::vector<std::size_t>& ring_order) {
    const auto n = static_cast<std::size_t>(mode.pattern.size());
    if (ring_order.size() != n) throw InvalidArgument("ring order length does not match mode pattern");
    std::vector<bool> seen(n, false);
    for (std::size_t p : ring_order) {
        if (p >= n || seen[p]) throw InvalidArgument("ring order must be a permutation of post indices");
        seen[p] = true;
    }
    const auto signs = detail::pattern_signs(mode.pattern);
    std::vector<int> ring;
    for (std::size_t p : ring_order) ring.push_back(signs[p]);

    const auto first = std::find_if(ring.begin(), ring.end(), [](int s) { return s != 0; });
    WgmOrder result;
    if (first == ring.end()) return result;
    const auto offset = static_cast<std::size_t>(first - ring.begin());
    int current = *first;
    for (std::size_t step = 1; step <= n; ++step) {
        const int s = ring[(offset + step) % n];
        if (s == 0) continue;
        if (s != current) ++result.node_count;
        current = s;
    }
    result.order = result.node_count;
    result.azimuthal_index = result.node_count / 2;
    return result;
}

// Detune post 0 by a relative amount, breaking the ring symmetry.
inline CavityNetwork perturb_symmetry(const CavityNetwork& network, double epsilon) {
    if (!(std::abs(epsilon) < 0.1)) throw InvalidArgument("perturb_symmetry needs |epsilon| < 0.1");
    CavityNetwork out = network;
    if (out.post_freq_ghz.empty()) throw InvalidArgument("empty network");
    out.post_freq_ghz[0] *= 1.0 + epsilon;
    return out;
}

} // namespace magnon_hybrid
