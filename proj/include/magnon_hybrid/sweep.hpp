#pragma once

// Polariton branches versus static field.

#include "magnon_hybrid/errors.hpp"
#include "magnon_hybrid/magnon_model.hpp"
#include "magnon_hybrid/parallel.hpp"
#include "magnon_hybrid/quadratic_hamiltonian.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace magnon_hybrid {

struct BranchSet {
    std::vector<double> field_axis_t;
    std::vector<PolaritonSet> points;  // one per field value; unstable points keep stable = false

    std::size_t n_branches() const {
        for (const auto& p : points)
            if (p.stable) return p.size();
        return 0;
    }
    std::size_t n_stable() const {
        std::size_t n = 0;
        for (const auto& p : points) n += p.stable ? 1 : 0;
        return n;
    }
};

inline void check_axis(const std::vector<double>& axis, const char* what) {
    if (axis.empty()) throw InvalidArgument(std::string(what) + " axis is empty");
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!std::isfinite(axis[i])) throw InvalidArgument(std::string(what) + " axis has non-finite values");
        if (i > 0 && !(axis[i] > axis[i - 1]))
            throw InvalidArgument(std::string(what) + " axis must be strictly increasing");
    }
}

inline std::vector<double> linspace(double start, double stop, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = start;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i)
        out[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

// Model with the magnon tuned to the given field. Fields below the offset give
// a non-positive magnon frequency, which solve_polaritons reports as unstable.
inline HybridModel tuned_model(const HybridModel& model_template, const MagnonMode& magnon, double field_t) {
    HybridModel m = model_template;
    m.magnon_freq_ghz = magnon.gyro_ghz_per_t * (field_t - magnon.field_offset_t);
    m.magnon_linewidth_ghz = magnon.linewidth_ghz;
    return m;
}

inline BranchSet sweep(const HybridModel& model_template, const MagnonMode& magnon, const std::vector<double>& fields_t) {
    check_axis(fields_t, "field");
    model_template.validate_structure();
    magnon.validate();
    BranchSet out;
    out.field_axis_t = fields_t;
    out.points.resize(fields_t.size());
    parallel_for(fields_t.size(), [&](std::size_t i) {
        out.points[i] = solve_polaritons(tuned_model(model_template, magnon, fields_t[i]));
    });
    return out;
}

struct GapResult {
    double gap_ghz = 0.0;
    double field_t = 0.0;
};

// Smallest branch_j - branch_i over the stable points of the grid.
inline GapResult min_gap(const BranchSet& branches, std::size_t i, std::size_t j) {
    const std::size_t n = branches.n_branches();
    if (i >= n || j >= n) throw InvalidArgument("branch index out of range");
    GapResult best{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t p = 0; p < branches.points.size(); ++p) {
        const auto& set = branches.points[p];
        if (!set.stable) continue;
        const double gap = set.frequencies_ghz[j] - set.frequencies_ghz[i];
        if (gap < best.gap_ghz) best = {gap, branches.field_axis_t[p]};
    }
    if (!std::isfinite(best.gap_ghz)) throw InvalidArgument("branch set has no stable points");
    return best;
}

} // namespace magnon_hybrid
