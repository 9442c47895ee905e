// Synthetic transmission map -> ridge extraction -> three-parameter fit.

#include "magnon_hybrid/fitting.hpp"
#include "magnon_hybrid/spectra.hpp"

#include <cstdio>

using namespace magnon_hybrid;

int main() {
    HybridModel truth = build_n4(13.65, 0.155, 1.84, 13.65);
    truth.photon_linewidth_ghz = {0.014, 0.022};
    truth.magnon_linewidth_ghz = 0.001;
    const MagnonMode yig{28.0, 0.0, 0.001};

    const SpectralMap map = synth_map(truth, yig, linspace(0.2, 0.8, 200), linspace(9.0, 18.0, 2000));
    const RidgePoints ridges = extract_ridges(map, 6.0, 8);

    FitProblem problem;
    problem.data = samples_from_ridges(ridges);
    problem.kind = ModelKind::N4;
    problem.base_model = build_n4(13.5, 0.1, 1.7, 13.65);
    problem.base_model.photon_linewidth_ghz = truth.photon_linewidth_ghz;
    problem.magnon = yig;
    problem.free_params = {"omega_c", "g_rl", "g"};
    const FitResult result = fit(problem);

    std::printf("%zu ridge points, %s after %d iterations\n", problem.data.size(), result.message.c_str(), result.n_iter);
    for (std::size_t i = 0; i < result.param_names.size(); ++i)
        std::printf("%-8s %.5f +- %.5f GHz\n", result.param_names[i].c_str(), result.params[i], result.stddev(result.param_names[i]));
    std::printf("rms residual %.2e GHz\n", result.residual_rms);
}
