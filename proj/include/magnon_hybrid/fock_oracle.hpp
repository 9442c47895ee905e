#pragma once

// Brute-force reference for the polariton spectrum: the Hamiltonian is
// written out in a truncated Fock basis (n_max quanta per mode) and its
// lowest states are found numerically. Transitions from the ground state
// into the lowest odd-parity states are the one-polariton frequencies; the
// position-position couplings conserve total-number parity, so both sectors
// are solved separately.

#include "magnon_hybrid/errors.hpp"
#include "magnon_hybrid/quadratic_hamiltonian.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace magnon_hybrid {

inline constexpr std::size_t fock_basis_limit = 1'000'000;

struct FockOptions {
    std::size_t dense_limit = 1200;  // sector size up to which a dense eigensolve is used
    double residual_tol = 1e-9;      // Davidson residual norm, GHz
    int max_iter = 2000;
};

namespace detail {

class FockOperator {
public:
    FockOperator(const HybridModel& model, int n_max) : base_(static_cast<std::size_t>(n_max) + 1) {
        const Eigen::VectorXd w = bare_frequencies(model);
        const Eigen::MatrixXd k = coupling_matrix(model);
        modes_ = static_cast<std::size_t>(w.size());
        stride_.resize(modes_);
        dim_ = 1;
        for (std::size_t i = 0; i < modes_; ++i) {
            stride_[i] = dim_;
            if (dim_ > fock_basis_limit / base_ + 1) throw ResourceLimit("Fock basis exceeds 1e6 states");
            dim_ *= base_;
        }
        if (dim_ > fock_basis_limit) throw ResourceLimit("Fock basis exceeds 1e6 states");

        diag_.assign(dim_, 0.0);
        parity_.assign(dim_, 0);
        for (std::size_t idx = 0; idx < dim_; ++idx) {
            std::size_t total = 0;
            for (std::size_t i = 0; i < modes_; ++i) {
                const std::size_t n = digit(idx, i);
                diag_[idx] += w(static_cast<Eigen::Index>(i)) * static_cast<double>(n);
                total += n;
            }
            parity_[idx] = static_cast<int>(total % 2);
        }
        for (std::size_t i = 0; i < modes_; ++i)
            for (std::size_t j = i + 1; j < modes_; ++j) {
                const double c = k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (c != 0.0) pairs_.push_back({i, j, c});
            }
        sqrt_.resize(base_ + 1);
        for (std::size_t n = 0; n <= base_; ++n) sqrt_[n] = std::sqrt(static_cast<double>(n));
    }

    std::size_t dim() const { return dim_; }
    const std::vector<double>& diagonal() const { return diag_; }
    int parity(std::size_t idx) const { return parity_[idx]; }
    std::size_t stride(std::size_t mode) const { return stride_[mode]; }

    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
        y.resize(static_cast<Eigen::Index>(dim_));
        for (std::size_t idx = 0; idx < dim_; ++idx) y(static_cast<Eigen::Index>(idx)) = diag_[idx] * x(static_cast<Eigen::Index>(idx));
        Eigen::VectorXd t(static_cast<Eigen::Index>(dim_));
        Eigen::VectorXd u(static_cast<Eigen::Index>(dim_));
        for (const auto& p : pairs_) {
            apply_position(p.j, x, t);
            apply_position(p.i, t, u);
            y += p.c * u;
        }
    }

private:
    struct Pair {
        std::size_t i, j;
        double c;
    };

    std::size_t digit(std::size_t idx, std::size_t mode) const { return (idx / stride_[mode]) % base_; }

    // (a + a^+) acting on mode `mode`.
    void apply_position(std::size_t mode, const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
        const std::size_t s = stride_[mode];
        const std::size_t block = s * base_;
        const double* xp = x.data();
        double* yp = y.data();
        for (std::size_t b = 0; b < dim_; b += block) {
            for (std::size_t n = 0; n < base_; ++n) {
                const std::size_t off = b + n * s;
                const double up = n + 1 < base_ ? sqrt_[n + 1] : 0.0;
                const double down = sqrt_[n];
                for (std::size_t r = 0; r < s; ++r) {
                    double v = 0.0;
                    if (n + 1 < base_) v += up * xp[off + r + s];
                    if (n > 0) v += down * xp[off + r - s];
                    yp[off + r] = v;
                }
            }
        }
    }

    std::size_t base_;
    std::size_t modes_ = 0;
    std::size_t dim_ = 1;
    std::vector<std::size_t> stride_;
    std::vector<double> diag_;
    std::vector<int> parity_;
    std::vector<Pair> pairs_;
    std::vector<double> sqrt_;
};

inline std::vector<std::size_t> sector_indices(const FockOperator& op, int parity) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < op.dim(); ++i)
        if (op.parity(i) == parity) idx.push_back(i);
    return idx;
}

inline std::vector<double> dense_lowest(const FockOperator& op, const std::vector<std::size_t>& sector, std::size_t count) {
    const auto m = static_cast<Eigen::Index>(sector.size());
    Eigen::MatrixXd h(m, m);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(op.dim()));
    Eigen::VectorXd y;
    for (Eigen::Index c = 0; c < m; ++c) {
        x(static_cast<Eigen::Index>(sector[static_cast<std::size_t>(c)])) = 1.0;
        op.apply(x, y);
        x(static_cast<Eigen::Index>(sector[static_cast<std::size_t>(c)])) = 0.0;
        for (Eigen::Index r = 0; r < m; ++r) h(r, c) = y(static_cast<Eigen::Index>(sector[static_cast<std::size_t>(r)]));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    const auto take = std::min<std::size_t>(count, sector.size());
    return {es.eigenvalues().data(), es.eigenvalues().data() + take};
}

// Block Davidson with diagonal preconditioning. Guess vectors fix the parity sector.
inline std::vector<double> davidson_lowest(const FockOperator& op, const std::vector<std::size_t>& guesses,
                                           std::size_t count, const FockOptions& opt) {
    const auto dim = static_cast<Eigen::Index>(op.dim());
    const auto& diag = op.diagonal();
    const Eigen::Index max_sub = static_cast<Eigen::Index>(std::max<std::size_t>(8 * count, 24));

    Eigen::MatrixXd v(dim, max_sub + static_cast<Eigen::Index>(count));
    Eigen::MatrixXd av(dim, max_sub + static_cast<Eigen::Index>(count));
    Eigen::MatrixXd proj(v.cols(), v.cols());  // V^T A V, kept in step with v
    Eigen::Index m = 0;
    Eigen::VectorXd y;

    auto append = [&](Eigen::VectorXd t) {
        const double scale = t.norm();
        if (!(scale > 0.0)) return false;
        t /= scale;
        for (int pass = 0; pass < 2; ++pass)
            if (m > 0) t.noalias() -= v.leftCols(m) * (v.leftCols(m).transpose() * t);
        const double nrm = t.norm();
        if (nrm < 1e-8) return false;
        v.col(m) = t / nrm;
        op.apply(v.col(m), y);
        av.col(m) = y;
        const Eigen::VectorXd col = v.leftCols(m + 1).transpose() * y;
        proj.col(m).head(m + 1) = col;
        proj.row(m).head(m + 1) = col.transpose();
        ++m;
        return true;
    };

    for (std::size_t g : guesses) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
        e(static_cast<Eigen::Index>(g)) = 1.0;
        append(e);
    }
    const auto k = static_cast<Eigen::Index>(count);

    for (int iter = 0; iter < opt.max_iter; ++iter) {
        const Eigen::MatrixXd t = proj.topLeftCorner(m, m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        const Eigen::Index kk = std::min(k, m);
        Eigen::MatrixXd ritz = v.leftCols(m) * es.eigenvectors().leftCols(kk);
        Eigen::MatrixXd aritz = av.leftCols(m) * es.eigenvectors().leftCols(kk);

        std::vector<Eigen::VectorXd> corrections;
        for (Eigen::Index c = 0; c < kk; ++c) {
            const double theta = es.eigenvalues()(c);
            Eigen::VectorXd r = aritz.col(c) - theta * ritz.col(c);
            if (r.norm() < opt.residual_tol) continue;
            for (Eigen::Index i = 0; i < dim; ++i) {
                double d = theta - diag[static_cast<std::size_t>(i)];
                if (std::abs(d) < 1e-8) d = d < 0.0 ? -1e-8 : 1e-8;
                r(i) /= d;
            }
            corrections.push_back(std::move(r));
        }
        if (corrections.empty() && kk == k) {
            std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + k);
            return out;
        }
        if (m + static_cast<Eigen::Index>(corrections.size()) > max_sub) {
            // Thick restart on the current Ritz vectors.
            const Eigen::Index keep = std::min<Eigen::Index>(m, 2 * k);
            Eigen::MatrixXd nv = v.leftCols(m) * es.eigenvectors().leftCols(keep);
            Eigen::MatrixXd nav = av.leftCols(m) * es.eigenvectors().leftCols(keep);
            v.leftCols(keep) = nv;
            av.leftCols(keep) = nav;
            proj.topLeftCorner(keep, keep) = es.eigenvalues().head(keep).asDiagonal();
            m = keep;
        }
        bool grew = false;
        for (auto& c : corrections) grew = append(std::move(c)) || grew;
        if (!grew && !corrections.empty()) break;
    }
    throw Error("Fock oracle: Davidson iteration did not converge");
}

} // namespace detail

// Lowest `count` one-polariton transition frequencies (GHz) from the ground
// state; count = 0 means N+1. Requires n_max >= 4 and (n_max+1)^(N+1) <= 1e6.
inline std::vector<double> fock_oracle(const HybridModel& model, int n_max, std::size_t count = 0,
                                       const FockOptions& opt = {}) {
    model.validate();
    if (n_max < 4) throw InvalidArgument("fock_oracle needs n_max >= 4");
    const detail::FockOperator op(model, n_max);
    if (count == 0) count = model.n_modes();

    const auto even = detail::sector_indices(op, 0);
    const auto odd = detail::sector_indices(op, 1);

    std::vector<double> ground, excited;
    if (even.size() <= opt.dense_limit) {
        ground = detail::dense_lowest(op, even, 1);
    } else {
        ground = detail::davidson_lowest(op, {0}, 1, opt);
    }
    if (odd.size() <= opt.dense_limit) {
        excited = detail::dense_lowest(op, odd, count);
    } else {
        // Start from the single-quantum states, then the lowest other odd states.
        std::vector<std::size_t> guesses;
        for (std::size_t i = 0; i < model.n_modes(); ++i) guesses.push_back(op.stride(i));
        std::vector<std::size_t> rest(odd);
        std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) { return op.diagonal()[a] < op.diagonal()[b]; });
        for (std::size_t idx : rest) {
            if (guesses.size() >= count + 2) break;
            if (std::find(guesses.begin(), guesses.end(), idx) == guesses.end()) guesses.push_back(idx);
        }
        excited = detail::davidson_lowest(op, guesses, count, opt);
    }
    std::vector<double> out;
    for (double e : excited) out.push_back(e - ground.front());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace magnon_hybrid
