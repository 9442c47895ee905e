#pragma once

// Minimal self-contained SVG plots: polariton branches (optionally over a
// transmission map) and fit residuals.

#include "magnon_hybrid/fitting.hpp"
#include "magnon_hybrid/spectra.hpp"
#include "magnon_hybrid/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace magnon_hybrid::svg {

namespace detail {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

// Round tick step: 1, 2 or 5 times a power of ten.
inline double tick_step(double span, int target) {
    const double raw = span / std::max(target, 1);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

// Grey-to-blue ramp for t in [0, 1].
inline std::string ramp(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(250 - 230 * t), g = static_cast<int>(250 - 180 * t), b = static_cast<int>(250 - 60 * t);
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    return colors[i % 8];
}

class Plot {
public:
    Plot(double x0, double x1, double y0, double y1, std::string xlabel, std::string ylabel, std::string title)
        : x0_(x0), x1_(x1 > x0 ? x1 : x0 + 1.0), y0_(y0), y1_(y1 > y0 ? y1 : y0 + 1.0), xlabel_(std::move(xlabel)),
          ylabel_(std::move(ylabel)), title_(std::move(title)) {}

    double px(double x) const { return left + (x - x0_) / (x1_ - x0_) * w; }
    double py(double y) const { return top + (1.0 - (y - y0_) / (y1_ - y0_)) * h; }

    void rect(double xa, double xb, double ya, double yb, const std::string& fill) {
        body_ << "<rect x=\"" << num(px(xa)) << "\" y=\"" << num(py(yb)) << "\" width=\"" << num(px(xb) - px(xa))
              << "\" height=\"" << num(py(ya) - py(yb)) << "\" fill=\"" << fill << "\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color, const std::string& dash = "") {
        if (pts.size() < 2) return;
        body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
        if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
        body_ << " points=\"";
        for (const auto& [x, y] : pts) body_ << num(px(x)) << ',' << num(py(y)) << ' ';
        body_ << "\"/>\n";
    }

    void dot(double x, double y, const std::string& color, double r = 2.0) {
        body_ << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"" << num(r) << "\" fill=\"" << color << "\"/>\n";
    }

    void hline(double y, const std::string& color) {
        body_ << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + w) << "\" y1=\"" << num(py(y)) << "\" y2=\"" << num(py(y))
              << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
    }

    void legend(std::size_t row, const std::string& color, const std::string& text) {
        const double y = top + 14.0 + 16.0 * static_cast<double>(row);
        body_ << "<line x1=\"" << num(left + w + 12) << "\" x2=\"" << num(left + w + 32) << "\" y1=\"" << num(y) << "\" y2=\""
              << num(y) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
              << "<text x=\"" << num(left + w + 38) << "\" y=\"" << num(y + 4) << "\">" << escape(text) << "</text>\n";
    }

    std::string str() const {
        std::ostringstream out;
        const double width = left + w + 130.0, height = top + h + 60.0;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
            << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << "<text x=\"" << num(left + w / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << escape(title_) << "</text>\n"
            << "<clipPath id=\"area\"><rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(w)
            << "\" height=\"" << num(h) << "\"/></clipPath>\n"
            << "<g clip-path=\"url(#area)\">\n"
            << body_.str() << "</g>\n"
            << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
            << "\" fill=\"none\" stroke=\"black\"/>\n";
        const double sx = tick_step(x1_ - x0_, 8), sy = tick_step(y1_ - y0_, 8);
        for (double t = std::ceil(x0_ / sx) * sx; t <= x1_ + 1e-9 * sx; t += sx)
            out << "<line x1=\"" << num(px(t)) << "\" x2=\"" << num(px(t)) << "\" y1=\"" << num(top + h) << "\" y2=\""
                << num(top + h + 5) << "\" stroke=\"black\"/>\n"
                << "<text x=\"" << num(px(t)) << "\" y=\"" << num(top + h + 18) << "\" text-anchor=\"middle\">"
                << num(std::abs(t) < 1e-12 * sx ? 0.0 : t) << "</text>\n";
        for (double t = std::ceil(y0_ / sy) * sy; t <= y1_ + 1e-9 * sy; t += sy)
            out << "<line x1=\"" << num(left - 5) << "\" x2=\"" << num(left) << "\" y1=\"" << num(py(t)) << "\" y2=\"" << num(py(t))
                << "\" stroke=\"black\"/>\n"
                << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">"
                << num(std::abs(t) < 1e-12 * sy ? 0.0 : t) << "</text>\n";
        out << "<text x=\"" << num(left + w / 2) << "\" y=\"" << num(top + h + 40) << "\" text-anchor=\"middle\">" << escape(xlabel_)
            << "</text>\n"
            << "<text transform=\"translate(18," << num(top + h / 2) << ") rotate(-90)\" text-anchor=\"middle\">" << escape(ylabel_)
            << "</text>\n"
            << "</svg>\n";
        return out.str();
    }

    static constexpr double left = 70.0, top = 35.0, w = 560.0, h = 400.0;

private:
    double x0_, x1_, y0_, y1_;
    std::string xlabel_, ylabel_, title_;
    std::ostringstream body_;
};

} // namespace detail

// Branches as solid lines; unstable field points break the lines and are
// marked along the bottom edge. A background map is drawn as a heat map
// downsampled to at most 240 x 240 cells.
inline std::string branches_svg(const BranchSet& branches, const SpectralMap* background = nullptr,
                                const std::string& title = "Polariton branches") {
    const auto& b = branches.field_axis_t;
    double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
    for (const auto& p : branches.points)
        for (double f : p.frequencies_ghz) {
            fmin = std::min(fmin, f);
            fmax = std::max(fmax, f);
        }
    double x0 = b.empty() ? 0.0 : b.front(), x1 = b.empty() ? 1.0 : b.back();
    if (background) {
        fmin = background->freq_axis_ghz.front();
        fmax = background->freq_axis_ghz.back();
        x0 = std::min(x0, background->field_axis_t.front());
        x1 = std::max(x1, background->field_axis_t.back());
    }
    if (!std::isfinite(fmin)) fmin = 0.0, fmax = 1.0;
    const double pad = background ? 0.0 : 0.05 * (fmax - fmin + 1e-9);
    detail::Plot plot(x0, x1, fmin - pad, fmax + pad, "Field (T)", "Frequency (GHz)", title);

    if (background) {
        const auto& m = *background;
        const double lo = m.magnitude_db.minCoeff(), hi = m.magnitude_db.maxCoeff();
        const auto nr = static_cast<std::size_t>(m.magnitude_db.rows()), nc = static_cast<std::size_t>(m.magnitude_db.cols());
        const std::size_t sr = std::max<std::size_t>(1, (nr + 239) / 240), sc = std::max<std::size_t>(1, (nc + 239) / 240);
        auto edge = [](const std::vector<double>& ax, std::size_t i) {
            if (ax.size() == 1) return ax[0] + (i == 0 ? -0.5 : 0.5);
            if (i == 0) return ax[0] - 0.5 * (ax[1] - ax[0]);
            if (i >= ax.size()) return ax.back() + 0.5 * (ax.back() - ax[ax.size() - 2]);
            return 0.5 * (ax[i - 1] + ax[i]);
        };
        for (std::size_t i = 0; i < nr; i += sr)
            for (std::size_t j = 0; j < nc; j += sc) {
                const double v = m.magnitude_db.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j),
                                                      static_cast<Eigen::Index>(std::min(sr, nr - i)),
                                                      static_cast<Eigen::Index>(std::min(sc, nc - j)))
                                     .maxCoeff();
                plot.rect(edge(m.field_axis_t, i), edge(m.field_axis_t, std::min(i + sr, nr)), edge(m.freq_axis_ghz, j),
                          edge(m.freq_axis_ghz, std::min(j + sc, nc)), detail::ramp(hi > lo ? (v - lo) / (hi - lo) : 0.0));
            }
    }

    const std::size_t nb = branches.n_branches();
    for (std::size_t k = 0; k < nb; ++k) {
        std::vector<std::pair<double, double>> run;
        for (std::size_t i = 0; i < branches.points.size(); ++i) {
            const auto& p = branches.points[i];
            if (!p.stable || k >= p.size()) {
                plot.polyline(run, detail::palette(k));
                run.clear();
                continue;
            }
            run.emplace_back(b[i], p.frequencies_ghz[k]);
        }
        plot.polyline(run, detail::palette(k));
        plot.legend(k, detail::palette(k), "branch " + std::to_string(k));
    }
    bool any_unstable = false;
    for (std::size_t i = 0; i < branches.points.size(); ++i)
        if (!branches.points[i].stable) {
            plot.dot(b[i], fmin - pad + 0.01 * (fmax - fmin + 2 * pad), "black", 2.5);
            any_unstable = true;
        }
    if (any_unstable) plot.legend(nb, "black", "unstable");
    return plot.str();
}

// Residuals (MHz) against field, coloured by assigned branch.
inline std::string residuals_svg(const std::vector<BranchSample>& data, const FitResult& result,
                                 const std::string& title = "Fit residuals") {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, r = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        x0 = std::min(x0, data[k].field_t);
        x1 = std::max(x1, data[k].field_t);
        if (k < result.residuals_ghz.size()) r = std::max(r, std::abs(result.residuals_ghz[k]) * 1e3);
    }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
    if (!(r > 0.0)) r = 1.0;
    detail::Plot plot(x0, x1, -1.1 * r, 1.1 * r, "Field (T)", "Residual (MHz)", title);
    plot.hline(0.0, "#888888");
    std::size_t max_branch = 0;
    for (std::size_t k = 0; k < data.size() && k < result.residuals_ghz.size(); ++k) {
        const std::size_t br = k < result.assignment.size() ? result.assignment[k] : 0;
        max_branch = std::max(max_branch, br);
        plot.dot(data[k].field_t, result.residuals_ghz[k] * 1e3, detail::palette(br));
    }
    if (!data.empty())
        for (std::size_t k = 0; k <= max_branch; ++k) plot.legend(k, detail::palette(k), "branch " + std::to_string(k));
    return plot.str();
}

} // namespace magnon_hybrid::svg
