#pragma once

// Damped least-squares fit of hybrid-model parameters to (field, frequency)
// branch samples. Samples carry no branch label: at every evaluation each
// sample is assigned to the nearest model branch at its field.

#include "magnon_hybrid/errors.hpp"
#include "magnon_hybrid/magnon_model.hpp"
#include "magnon_hybrid/quadratic_hamiltonian.hpp"
#include "magnon_hybrid/spectra.hpp"
#include "magnon_hybrid/sweep.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace magnon_hybrid {

enum class ModelKind { N4, N8, Generic };

inline std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::N4: return "n4";
    case ModelKind::N8: return "n8";
    case ModelKind::Generic: return "generic";
    }
    return "generic";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "n4" || s == "N4") return ModelKind::N4;
    if (s == "n8" || s == "N8") return ModelKind::N8;
    if (s == "generic" || s == "generic-N") return ModelKind::Generic;
    throw InvalidArgument("unknown model kind '" + s + "'");
}

struct BranchSample {
    double field_t = 0.0;
    double freq_ghz = 0.0;
};

inline std::vector<BranchSample> samples_from_ridges(const RidgePoints& ridges) {
    std::vector<BranchSample> out;
    out.reserve(ridges.points.size());
    for (const auto& p : ridges.points) out.push_back({p.field_t, p.freq_ghz});
    return out;
}

struct Bounds {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct FitOptions {
    int max_iter = 500;
    double rel_cost_tol = 1e-10;
    double grad_tol = 1e-8;
    double jacobian_rel_step = 1e-6;
};

struct FitProblem {
    std::vector<BranchSample> data;
    ModelKind kind = ModelKind::Generic;
    HybridModel base_model;  // supplies every fixed parameter; magnon_freq is set per field
    MagnonMode magnon;
    std::vector<std::string> free_params;
    std::map<std::string, Bounds> bounds;   // missing entries get a default range
    std::map<std::string, double> initial;  // missing entries start from base_model / magnon
    FitOptions options;
};

struct FitResult {
    std::vector<std::string> param_names;
    std::vector<double> params;
    double residual_rms = 0.0;
    Eigen::MatrixXd covariance;
    int n_iter = 0;
    bool converged = false;
    std::string message;
    std::size_t rejected_unstable = 0;  // trial steps rejected for leaving the stable region
    HybridModel model;                  // base model with fitted values substituted
    MagnonMode magnon;
    std::vector<double> residuals_ghz;  // data - nearest branch at the optimum
    std::vector<std::size_t> assignment;

    double value(const std::string& name) const {
        for (std::size_t i = 0; i < param_names.size(); ++i)
            if (param_names[i] == name) return params[i];
        throw InvalidArgument("parameter '" + name + "' is not a fitted parameter");
    }
    double stddev(const std::string& name) const {
        for (std::size_t i = 0; i < param_names.size(); ++i)
            if (param_names[i] == name) return std::sqrt(covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
        throw InvalidArgument("parameter '" + name + "' is not a fitted parameter");
    }
};

// ---- parameter naming -------------------------------------------------------

inline std::vector<std::string> parameter_names(ModelKind kind, std::size_t n_photons) {
    std::vector<std::string> names;
    switch (kind) {
    case ModelKind::N4: names = {"omega_c", "g_rl", "g"}; break;
    case ModelKind::N8: names = {"omega_c1", "omega_c2", "omega_c3", "g1", "g2", "g3"}; break;
    case ModelKind::Generic:
        for (std::size_t i = 0; i < n_photons; ++i) names.push_back("photon_freq[" + std::to_string(i) + "]");
        for (std::size_t i = 0; i < n_photons; ++i)
            for (std::size_t j = i + 1; j < n_photons; ++j)
                names.push_back("photon_coupling[" + std::to_string(i) + "][" + std::to_string(j) + "]");
        for (std::size_t i = 0; i < n_photons; ++i) names.push_back("magnon_coupling[" + std::to_string(i) + "]");
        break;
    }
    names.push_back("gyro");
    names.push_back("field_offset");
    return names;
}

namespace detail {

struct ParamRef {
    enum class Target { PhotonFreq, PhotonPair, MagnonCoupling, Gyro, FieldOffset } target;
    std::size_t i = 0, j = 0;
    bool tied_pair = false;  // N4 omega_c drives both doublet modes
};

inline ParamRef resolve_parameter(ModelKind kind, std::size_t n_photons, const std::string& name) {
    using T = ParamRef::Target;
    if (name == "gyro") return {T::Gyro};
    if (name == "field_offset") return {T::FieldOffset};
    switch (kind) {
    case ModelKind::N4:
        if (n_photons != 2) throw InvalidArgument("n4 model needs exactly two photon modes");
        if (name == "omega_c") return {T::PhotonFreq, 0, 0, true};
        if (name == "g_rl") return {T::PhotonPair, 0, 1};
        if (name == "g") return {T::MagnonCoupling, 0};
        break;
    case ModelKind::N8:
        if (n_photons != 3) throw InvalidArgument("n8 model needs exactly three photon modes");
        for (std::size_t i = 0; i < 3; ++i) {
            if (name == "omega_c" + std::to_string(i + 1)) return {T::PhotonFreq, i};
            if (name == "g" + std::to_string(i + 1)) return {T::MagnonCoupling, i};
        }
        break;
    case ModelKind::Generic: {
        unsigned a = 0, b = 0;
        char tail = 0;
        if (std::sscanf(name.c_str(), "photon_freq[%u]%c", &a, &tail) == 1 && a < n_photons) return {T::PhotonFreq, a};
        if (std::sscanf(name.c_str(), "magnon_coupling[%u]%c", &a, &tail) == 1 && a < n_photons)
            return {T::MagnonCoupling, a};
        if (std::sscanf(name.c_str(), "photon_coupling[%u][%u]%c", &a, &b, &tail) == 2 && a < b && b < n_photons)
            return {T::PhotonPair, a, b};
        break;
    }
    }
    throw InvalidArgument("unknown parameter '" + name + "' for model kind " + to_string(kind));
}

inline Bounds default_bounds(const ParamRef& ref) {
    using T = ParamRef::Target;
    switch (ref.target) {
    case T::PhotonFreq: return {1e-6, 1e4};
    case T::Gyro: return {1e-6, 1e4};
    case T::FieldOffset: return {-100.0, 100.0};
    default: return {-1e4, 1e4};
    }
}

} // namespace detail

inline double get_parameter(const HybridModel& model, const MagnonMode& magnon, ModelKind kind, const std::string& name) {
    const auto ref = detail::resolve_parameter(kind, model.n_photons(), name);
    using T = detail::ParamRef::Target;
    switch (ref.target) {
    case T::PhotonFreq: return model.photon_freq_ghz[ref.i];
    case T::PhotonPair: return model.photon_coupling_ghz(static_cast<Eigen::Index>(ref.i), static_cast<Eigen::Index>(ref.j));
    case T::MagnonCoupling: return model.magnon_coupling_ghz[ref.i];
    case T::Gyro: return magnon.gyro_ghz_per_t;
    case T::FieldOffset: return magnon.field_offset_t;
    }
    return 0.0;
}

inline void set_parameter(HybridModel& model, MagnonMode& magnon, ModelKind kind, const std::string& name, double value) {
    const auto ref = detail::resolve_parameter(kind, model.n_photons(), name);
    using T = detail::ParamRef::Target;
    switch (ref.target) {
    case T::PhotonFreq:
        if (ref.tied_pair) model.photon_freq_ghz.assign(model.photon_freq_ghz.size(), value);
        else model.photon_freq_ghz[ref.i] = value;
        break;
    case T::PhotonPair:
        model.photon_coupling_ghz(static_cast<Eigen::Index>(ref.i), static_cast<Eigen::Index>(ref.j)) = value;
        model.photon_coupling_ghz(static_cast<Eigen::Index>(ref.j), static_cast<Eigen::Index>(ref.i)) = value;
        break;
    case T::MagnonCoupling: model.magnon_coupling_ghz[ref.i] = value; break;
    case T::Gyro: magnon.gyro_ghz_per_t = value; break;
    case T::FieldOffset: magnon.field_offset_t = value; break;
    }
}

// The spectrum is unchanged when any one mode operator changes sign, which
// flips every coupling touching that mode. Canonical gauge: magnon couplings
// non-negative; a photon without magnon coupling gets a positive coupling to
// the first earlier photon it touches.
inline HybridModel canonical_gauge(const HybridModel& model) {
    const std::size_t n = model.n_photons();
    std::vector<double> sign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (model.magnon_coupling_ghz[i] != 0.0) {
            sign[i] = model.magnon_coupling_ghz[i] < 0.0 ? -1.0 : 1.0;
            continue;
        }
        for (std::size_t j = 0; j < i; ++j) {
            const double c = model.photon_coupling_ghz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (c != 0.0) {
                sign[i] = c * sign[j] < 0.0 ? -1.0 : 1.0;
                break;
            }
        }
    }
    HybridModel out = model;
    for (std::size_t i = 0; i < n; ++i) {
        out.magnon_coupling_ghz[i] *= sign[i];
        for (std::size_t j = 0; j < n; ++j)
            out.photon_coupling_ghz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *= sign[i] * sign[j];
    }
    return out;
}

// ---- objective ----------------------------------------------------------------

namespace detail {

class BranchObjective {
public:
    explicit BranchObjective(const FitProblem& problem) : problem_(problem) {
        for (const auto& s : problem.data) fields_.push_back(s.field_t);
        std::sort(fields_.begin(), fields_.end());
        fields_.erase(std::unique(fields_.begin(), fields_.end()), fields_.end());
        for (const auto& s : problem.data)
            field_index_.push_back(static_cast<std::size_t>(std::lower_bound(fields_.begin(), fields_.end(), s.field_t) - fields_.begin()));
    }

    std::pair<HybridModel, MagnonMode> realize(const Eigen::VectorXd& x) const {
        HybridModel m = problem_.base_model;
        MagnonMode mag = problem_.magnon;
        for (std::size_t p = 0; p < problem_.free_params.size(); ++p)
            set_parameter(m, mag, problem_.kind, problem_.free_params[p], x(static_cast<Eigen::Index>(p)));
        return {m, mag};
    }

    // Branch frequencies at every distinct field; nullopt if any point is unstable.
    std::optional<std::vector<std::vector<double>>> branches(const Eigen::VectorXd& x) const {
        auto [m, mag] = realize(x);
        if (!(mag.gyro_ghz_per_t > 0.0)) return std::nullopt;
        for (double f : m.photon_freq_ghz)
            if (!(f > 0.0)) return std::nullopt;
        std::vector<std::vector<double>> out(fields_.size());
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            const PolaritonSet set = solve_polaritons(tuned_model(m, mag, fields_[i]));
            if (!set.stable) return std::nullopt;
            out[i] = set.frequencies_ghz;
        }
        return out;
    }

    struct Evaluation {
        Eigen::VectorXd residuals;
        std::vector<std::size_t> assignment;
        double cost = std::numeric_limits<double>::infinity();
    };

    std::optional<Evaluation> evaluate(const Eigen::VectorXd& x) const {
        auto br = branches(x);
        if (!br) return std::nullopt;
        Evaluation e;
        const auto m = static_cast<Eigen::Index>(problem_.data.size());
        e.residuals.resize(m);
        e.assignment.resize(problem_.data.size());
        for (std::size_t k = 0; k < problem_.data.size(); ++k) {
            const auto& b = (*br)[field_index_[k]];
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < b.size(); ++j) {
                const double d = std::abs(problem_.data[k].freq_ghz - b[j]);
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            e.assignment[k] = best;
            e.residuals(static_cast<Eigen::Index>(k)) = problem_.data[k].freq_ghz - b[best];
        }
        e.cost = e.residuals.squaredNorm();
        return e;
    }

    // Residuals under a fixed assignment; nullopt if unstable.
    std::optional<Eigen::VectorXd> residuals_fixed(const Eigen::VectorXd& x, const std::vector<std::size_t>& assignment) const {
        auto br = branches(x);
        if (!br) return std::nullopt;
        Eigen::VectorXd r(static_cast<Eigen::Index>(problem_.data.size()));
        for (std::size_t k = 0; k < problem_.data.size(); ++k)
            r(static_cast<Eigen::Index>(k)) = problem_.data[k].freq_ghz - (*br)[field_index_[k]][assignment[k]];
        return r;
    }

    // Central-difference Jacobian of the residuals; one-sided where a side is unstable.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& r0, const std::vector<std::size_t>& assignment) const {
        const auto p = x.size();
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(r0.size(), p);
        for (Eigen::Index c = 0; c < p; ++c) {
            const double h = problem_.options.jacobian_rel_step * std::max(std::abs(x(c)), 1.0);
            Eigen::VectorXd xp = x, xm = x;
            xp(c) += h;
            xm(c) -= h;
            const auto rp = residuals_fixed(xp, assignment);
            const auto rm = residuals_fixed(xm, assignment);
            if (rp && rm) jac.col(c) = (*rp - *rm) / (2.0 * h);
            else if (rp) jac.col(c) = (*rp - r0) / h;
            else if (rm) jac.col(c) = (r0 - *rm) / h;
        }
        return jac;
    }

    const std::vector<double>& fields() const { return fields_; }

private:
    const FitProblem& problem_;
    std::vector<double> fields_;
    std::vector<std::size_t> field_index_;
};

struct PreparedProblem {
    Eigen::VectorXd x0, lo, hi;
};

inline PreparedProblem prepare(const FitProblem& problem) {
    problem.base_model.validate_structure();
    if (problem.free_params.empty()) throw InvalidArgument("fit needs at least one free parameter");
    for (std::size_t a = 0; a < problem.free_params.size(); ++a)
        for (std::size_t b = a + 1; b < problem.free_params.size(); ++b)
            if (problem.free_params[a] == problem.free_params[b])
                throw InvalidArgument("duplicate free parameter '" + problem.free_params[a] + "'");
    if (problem.data.size() < 2 * problem.free_params.size())
        throw InvalidArgument("insufficient data: need at least twice as many samples as free parameters");
    for (const auto& [name, b] : problem.bounds) {
        if (std::find(problem.free_params.begin(), problem.free_params.end(), name) == problem.free_params.end())
            throw InvalidArgument("bounds given for non-free parameter '" + name + "'");
        if (!(b.lo <= b.hi)) throw InvalidArgument("empty bounds for '" + name + "'");
    }
    for (const auto& [name, v] : problem.initial)
        if (std::find(problem.free_params.begin(), problem.free_params.end(), name) == problem.free_params.end())
            throw InvalidArgument("initial value given for non-free parameter '" + name + "'");
    for (const auto& s : problem.data)
        if (!std::isfinite(s.field_t) || !std::isfinite(s.freq_ghz)) throw InvalidArgument("non-finite data sample");

    const auto p = static_cast<Eigen::Index>(problem.free_params.size());
    PreparedProblem out{Eigen::VectorXd(p), Eigen::VectorXd(p), Eigen::VectorXd(p)};
    for (Eigen::Index i = 0; i < p; ++i) {
        const auto& name = problem.free_params[static_cast<std::size_t>(i)];
        const auto ref = resolve_parameter(problem.kind, problem.base_model.n_photons(), name);
        const auto bit = problem.bounds.find(name);
        const Bounds b = bit != problem.bounds.end() ? bit->second : default_bounds(ref);
        const auto iit = problem.initial.find(name);
        const double x0 = iit != problem.initial.end() ? iit->second
                                                       : get_parameter(problem.base_model, problem.magnon, problem.kind, name);
        if (!(x0 >= b.lo && x0 <= b.hi))
            throw InvalidArgument("initial value of '" + name + "' lies outside its bounds");
        out.x0(i) = x0;
        out.lo(i) = b.lo;
        out.hi(i) = b.hi;
    }
    return out;
}

// Covariance s^2 (J^T J)^+, with s^2 the residual variance per degree of freedom.
inline Eigen::MatrixXd covariance_from(const Eigen::MatrixXd& jac, double cost) {
    const auto m = jac.rows(), p = jac.cols();
    const double s2 = m > p ? cost / static_cast<double>(m - p) : 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac.transpose() * jac);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::VectorXd inv(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double ev = es.eigenvalues()(i);
        inv(i) = ev > 1e-14 * top ? 1.0 / ev : 0.0;
    }
    Eigen::MatrixXd cov = s2 * es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (cov + cov.transpose());
}

} // namespace detail

inline FitResult fit(const FitProblem& problem) {
    const auto prep = detail::prepare(problem);
    const detail::BranchObjective objective(problem);
    const auto& opt = problem.options;

    Eigen::VectorXd x = prep.x0;
    auto current = objective.evaluate(x);
    if (!current) {
        throw Instability("initial parameters give an unstable model within the data field range", {});
    }

    FitResult result;
    double lambda = 1e-3;
    int iter = 0;
    bool converged = false;
    std::string message = "maximum iterations reached";
    Eigen::MatrixXd jac = objective.jacobian(x, current->residuals, current->assignment);

    for (; iter < opt.max_iter; ++iter) {
        const Eigen::VectorXd grad = jac.transpose() * current->residuals;
        if (grad.norm() < opt.grad_tol) {
            converged = true;
            message = "gradient norm below tolerance";
            break;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd scale = jtj.diagonal();
        const double floor = std::max(scale.maxCoeff(), 1e-300) * 1e-12;
        scale = scale.cwiseMax(floor);

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * scale;
            Eigen::VectorXd trial = (x + a.ldlt().solve(-grad)).cwiseMax(prep.lo).cwiseMin(prep.hi);
            if ((trial - x).cwiseAbs().maxCoeff() == 0.0) {
                lambda = std::numeric_limits<double>::infinity();
                break;
            }
            auto ev = objective.evaluate(trial);
            if (!ev) ++result.rejected_unstable;
            if (ev && ev->cost < current->cost) {
                const double rel = (current->cost - ev->cost) / std::max(current->cost, 1e-300);
                x = trial;
                current = std::move(ev);
                jac = objective.jacobian(x, current->residuals, current->assignment);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel < opt.rel_cost_tol) {
                    converged = true;
                    message = "relative cost change below tolerance";
                }
            } else {
                lambda *= 4.0;
                if (lambda > 1e16) break;
            }
        }
        if (converged) {
            ++iter;
            break;
        }
        if (!accepted) {
            // No step of any length lowers the cost: a stationary point to working precision.
            converged = true;
            message = "no further decrease possible";
            ++iter;
            break;
        }
    }

    auto [m, mag] = objective.realize(x);
    Eigen::MatrixXd cov = detail::covariance_from(jac, current->cost);

    // Report the canonical gauge when it respects the bounds.
    const HybridModel canon = canonical_gauge(m);
    Eigen::VectorXd xc(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        xc(i) = get_parameter(canon, mag, problem.kind, problem.free_params[static_cast<std::size_t>(i)]);
    if ((xc.array() >= prep.lo.array()).all() && (xc.array() <= prep.hi.array()).all()) {
        const Eigen::VectorXd flip = (xc.array() * x.array() < 0.0).select(-Eigen::VectorXd::Ones(x.size()), Eigen::VectorXd::Ones(x.size()));
        cov = flip.asDiagonal() * cov * flip.asDiagonal();
        x = xc;
        m = canon;
    }

    result.param_names = problem.free_params;
    result.params.assign(x.data(), x.data() + x.size());
    result.residual_rms = std::sqrt(current->cost / static_cast<double>(problem.data.size()));
    result.covariance = cov;
    result.n_iter = iter;
    result.converged = converged;
    result.message = message;
    result.model = m;
    result.magnon = mag;
    result.residuals_ghz.assign(current->residuals.data(), current->residuals.data() + current->residuals.size());
    result.assignment = current->assignment;
    return result;
}

// Cost (sum of squared nearest-branch residuals) along one fitted parameter
// with the others held at the optimum. Unstable points give +infinity.
inline std::vector<double> residual_profile(const FitProblem& problem, const FitResult& result, const std::string& param_name,
                                            const std::vector<double>& values) {
    const auto it = std::find(problem.free_params.begin(), problem.free_params.end(), param_name);
    if (it == problem.free_params.end()) throw InvalidArgument("parameter '" + param_name + "' is not free in this problem");
    if (result.params.size() != problem.free_params.size()) throw InvalidArgument("fit result does not match problem");
    const auto idx = static_cast<Eigen::Index>(it - problem.free_params.begin());
    const detail::BranchObjective objective(problem);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(result.params.data(), static_cast<Eigen::Index>(result.params.size()));
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values) {
        x(idx) = v;
        const auto ev = objective.evaluate(x);
        out.push_back(ev ? ev->cost : std::numeric_limits<double>::infinity());
    }
    return out;
}

} // namespace magnon_hybrid
