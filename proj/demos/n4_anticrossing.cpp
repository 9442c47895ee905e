// Doublet-magnon anticrossing of the four-post cavity and its coupling regime.

#include "magnon_hybrid/quadratic_hamiltonian.hpp"
#include "magnon_hybrid/regime.hpp"
#include "magnon_hybrid/sweep.hpp"

#include <cstdio>

using namespace magnon_hybrid;

int main() {
    HybridModel model = build_n4(13.65, 0.155, 1.84, 13.65);
    model.photon_linewidth_ghz = {0.014, 0.022};
    model.magnon_linewidth_ghz = 0.001;
    const MagnonMode yig{28.0, 0.0, 0.001};

    const BranchSet branches = sweep(model, yig, linspace(0.3, 0.7, 81));
    for (std::size_t i = 0; i < branches.field_axis_t.size(); i += 10) {
        std::printf("B = %.3f T:", branches.field_axis_t[i]);
        for (double f : branches.points[i].frequencies_ghz) std::printf("  %8.4f", f);
        std::printf("  GHz\n");
    }
    const GapResult gap = min_gap(branches, 0, 2);
    std::printf("outer branches closest at B = %.3f T, gap %.3f GHz\n", gap.field_t, gap.gap_ghz);

    const RegimeReport r = classify(model);
    std::printf("strong %d  ultrastrong %d  superstrong %d\n", r.ordinary.strong, r.ordinary.ultrastrong, r.ordinary.superstrong);
}
