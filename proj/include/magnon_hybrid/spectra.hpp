#pragma once

// Transmission maps built as incoherent sums of Lorentzian polariton lines,
// and the inverse direction: single-line fits and ridge extraction.
//
// Line k of a hybrid model is centred on polariton frequency k. Its width
// mixes the bare widths by composition (photon i -> delta_i, magnon -> Gamma)
// and its height is proportional to the total photon fraction, so branches
// that are mostly magnon are faint. No interference between lines.

#include "magnon_hybrid/errors.hpp"
#include "magnon_hybrid/magnon_model.hpp"
#include "magnon_hybrid/parallel.hpp"
#include "magnon_hybrid/quadratic_hamiltonian.hpp"
#include "magnon_hybrid/sweep.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace magnon_hybrid {

inline constexpr double db_floor = -120.0;

inline double to_db(double power) { return 10.0 * std::log10(power); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

struct SpectralMap {
    std::vector<double> field_axis_t;
    std::vector<double> freq_axis_ghz;
    Eigen::MatrixXd magnitude_db;  // (field index, frequency index)

    void validate() const {
        check_axis(field_axis_t, "field");
        check_axis(freq_axis_ghz, "frequency");
        if (magnitude_db.rows() != static_cast<Eigen::Index>(field_axis_t.size()) ||
            magnitude_db.cols() != static_cast<Eigen::Index>(freq_axis_ghz.size()))
            throw InvalidArgument("map magnitude grid does not match its axes");
    }
};

struct LorentzianLine {
    double center_ghz = 0.0;
    double fwhm_ghz = 0.0;
    double amplitude = 0.0;  // linear power at the centre
};

inline double lorentzian_value(double f_ghz, const LorentzianLine& line) {
    const double hw = 0.5 * line.fwhm_ghz;
    const double d = f_ghz - line.center_ghz;
    return line.amplitude * hw * hw / (d * d + hw * hw);
}

struct SynthOptions {
    double amplitude_db = 0.0;  // peak level of a pure photon line
    double floor_db = db_floor;
};

// Lines visible at one field point.
inline std::vector<LorentzianLine> polariton_lines(const HybridModel& model, double amplitude_db = 0.0) {
    const double scale = from_db(amplitude_db);
    std::vector<LorentzianLine> lines;
    const PolaritonSet set = solve_polaritons(model);
    if (!set.stable) {
        for (std::size_t i = 0; i < model.n_photons(); ++i)
            lines.push_back({model.photon_freq_ghz[i], model.photon_linewidth_ghz[i], scale});
    } else {
        const auto n = static_cast<Eigen::Index>(model.n_photons());
        for (std::size_t k = 0; k < set.size(); ++k) {
            const auto row = set.fractions.row(static_cast<Eigen::Index>(k));
            double width = row(n) * model.magnon_linewidth_ghz;
            for (Eigen::Index i = 0; i < n; ++i) width += row(i) * model.photon_linewidth_ghz[static_cast<std::size_t>(i)];
            lines.push_back({set.frequencies_ghz[k], width, scale * set.photon_fraction(k)});
        }
    }
    std::erase_if(lines, [](const LorentzianLine& l) { return !(l.amplitude > 0.0); });
    for (const auto& l : lines)
        if (!(l.fwhm_ghz > 0.0)) throw InvalidArgument("visible line with zero linewidth; set positive linewidths");
    return lines;
}

inline SpectralMap synth_map(const HybridModel& model_template, const MagnonMode& magnon,
                             const std::vector<double>& fields_t, const std::vector<double>& freqs_ghz,
                             const SynthOptions& options = {}) {
    check_axis(fields_t, "field");
    check_axis(freqs_ghz, "frequency");
    model_template.validate_structure();
    magnon.validate();

    SpectralMap map;
    map.field_axis_t = fields_t;
    map.freq_axis_ghz = freqs_ghz;
    map.magnitude_db.resize(static_cast<Eigen::Index>(fields_t.size()), static_cast<Eigen::Index>(freqs_ghz.size()));
    parallel_for(fields_t.size(), [&](std::size_t i) {
        const auto lines = polariton_lines(tuned_model(model_template, magnon, fields_t[i]), options.amplitude_db);
        for (std::size_t j = 0; j < freqs_ghz.size(); ++j) {
            double p = 0.0;
            for (const auto& l : lines) p += lorentzian_value(freqs_ghz[j], l);
            map.magnitude_db(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                p > 0.0 ? std::max(to_db(p), options.floor_db) : options.floor_db;
        }
    });
    return map;
}

struct LineFit {
    LorentzianLine line;
    double q = 0.0;
    int iterations = 0;
};

// Least-squares Lorentzian fit (in linear power) to the samples within
// half_window_ghz of center_guess_ghz.
inline LineFit fit_line(const std::vector<double>& freqs_ghz, const std::vector<double>& magnitudes_db,
                        double center_guess_ghz, double half_window_ghz) {
    if (freqs_ghz.size() != magnitudes_db.size()) throw InvalidArgument("frequency and magnitude lengths differ");
    std::vector<double> f, p;
    for (std::size_t i = 0; i < freqs_ghz.size(); ++i) {
        if (std::abs(freqs_ghz[i] - center_guess_ghz) <= half_window_ghz) {
            f.push_back(freqs_ghz[i]);
            p.push_back(from_db(magnitudes_db[i]));
        }
    }
    if (f.size() < 7) throw InvalidArgument("fit window needs at least 7 samples");

    const auto peak = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    if (peak == 0 || peak + 1 == p.size()) throw NoPeak("no interior maximum inside the fit window");

    // Initial guess from the half-maximum crossings.
    const double half = 0.5 * p[peak];
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && p[lo] > half) --lo;
    while (hi + 1 < p.size() && p[hi] > half) ++hi;
    const double step = (f.back() - f.front()) / static_cast<double>(f.size() - 1);
    Eigen::Vector3d x(f[peak], std::max(f[hi] - f[lo] - step, step), p[peak]);  // centre, fwhm, amplitude

    auto residuals = [&](const Eigen::Vector3d& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const auto m = static_cast<Eigen::Index>(f.size());
        r.resize(m);
        if (jac) jac->resize(m, 3);
        const double hw = 0.5 * q(1);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double d = f[static_cast<std::size_t>(i)] - q(0);
            const double den = d * d + hw * hw;
            const double shape = hw * hw / den;
            r(i) = q(2) * shape - p[static_cast<std::size_t>(i)];
            if (jac) {
                (*jac)(i, 0) = q(2) * 2.0 * d * hw * hw / (den * den);
                (*jac)(i, 1) = q(2) * hw * d * d / (den * den);  // d/d(fwhm) = 0.5 d/d(hw)
                (*jac)(i, 2) = shape;
            }
        }
    };

    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residuals(x, r, &jac);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    int iter = 0;
    for (; iter < 200; ++iter) {
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d grad = jac.transpose() * r;
        Eigen::Matrix3d a = jtj;
        a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-30);
        const Eigen::Vector3d dx = a.ldlt().solve(-grad);
        Eigen::Vector3d trial = x + dx;
        trial(1) = std::abs(trial(1));
        Eigen::VectorXd rt;
        residuals(trial, rt, nullptr);
        const double ct = rt.squaredNorm();
        if (ct < cost) {
            const double rel = (cost - ct) / std::max(cost, 1e-300);
            x = trial;
            cost = ct;
            residuals(x, r, &jac);
            lambda = std::max(lambda / 5.0, 1e-12);
            if (rel < 1e-14 || dx.cwiseAbs().cwiseQuotient(x.cwiseAbs().cwiseMax(1e-300)).maxCoeff() < 1e-13) break;
        } else {
            lambda *= 4.0;
            if (lambda > 1e12) break;
        }
    }

    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(jtj, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev(0) > 1e-14 * ev(2))) throw Degenerate("Lorentzian fit covariance is singular");
    if (!(x(1) > 0.0) || !(x(2) > 0.0)) throw Degenerate("Lorentzian fit collapsed");

    LineFit out;
    out.line = {x(0), x(1), x(2)};
    out.q = x(0) / x(1);
    out.iterations = iter;
    return out;
}

struct RidgePoint {
    double field_t = 0.0;
    double freq_ghz = 0.0;
    double prominence_db = 0.0;
};

struct RidgePoints {
    std::vector<RidgePoint> points;
};

namespace detail {

// Vertex of the parabola through three points; returns x1 when degenerate.
inline double parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d0 = (y1 - y0) / (x1 - x0);
    const double d1 = (y2 - y1) / (x2 - x1);
    const double curv = (d1 - d0) / (x2 - x0);
    if (!(curv < 0.0)) return x1;
    const double v = 0.5 * (x0 + x1) - d0 / (2.0 * curv);
    return std::clamp(v, x0, x2);
}

inline std::vector<RidgePoint> column_peaks(const std::vector<double>& f, const double* v, std::size_t n,
                                            double field, double prominence_db, std::size_t max_peaks) {
    std::vector<RidgePoint> peaks;
    for (std::size_t j = 1; j + 1 < n; ++j) {
        if (!(v[j] > v[j - 1] && v[j] >= v[j + 1])) continue;
        double left_min = v[j];
        std::size_t k = j;
        while (k > 0) {
            --k;
            if (v[k] > v[j]) break;
            left_min = std::min(left_min, v[k]);
        }
        double right_min = v[j];
        for (k = j + 1; k < n; ++k) {
            if (v[k] > v[j]) break;
            right_min = std::min(right_min, v[k]);
        }
        const double prom = v[j] - std::max(left_min, right_min);
        if (prom < prominence_db) continue;
        const double fr = parabola_vertex(f[j - 1], v[j - 1], f[j], v[j], f[j + 1], v[j + 1]);
        peaks.push_back({field, fr, prom});
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const RidgePoint& a, const RidgePoint& b) { return a.prominence_db > b.prominence_db; });
    if (peaks.size() > max_peaks) peaks.resize(max_peaks);
    std::sort(peaks.begin(), peaks.end(), [](const RidgePoint& a, const RidgePoint& b) { return a.freq_ghz < b.freq_ghz; });
    return peaks;
}

} // namespace detail

// Local maxima of every field column with topographic prominence at least
// prominence_db, refined by a three-point parabola.
inline RidgePoints extract_ridges(const SpectralMap& map, double prominence_db, std::size_t max_peaks_per_column) {
    map.validate();
    const std::size_t nf = map.freq_axis_ghz.size();
    std::vector<std::vector<RidgePoint>> columns(map.field_axis_t.size());
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = map.magnitude_db;
    parallel_for(columns.size(), [&](std::size_t i) {
        columns[i] = detail::column_peaks(map.freq_axis_ghz, rows.row(static_cast<Eigen::Index>(i)).data(), nf,
                                          map.field_axis_t[i], prominence_db, max_peaks_per_column);
    });
    RidgePoints out;
    for (auto& c : columns) out.points.insert(out.points.end(), c.begin(), c.end());
    return out;
}

} // namespace magnon_hybrid
