#include <catch2/catch_amalgamated.hpp>

#include "magnon_hybrid/quadratic_hamiltonian.hpp"
#include "magnon_hybrid/sweep.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <random>

using namespace magnon_hybrid;
using Catch::Approx;

namespace {

HybridModel two_mode(double wc, double wm, double g) {
    HybridModel m;
    m.photon_freq_ghz = {wc};
    m.photon_coupling_ghz = Eigen::MatrixXd::Zero(1, 1);
    m.magnon_freq_ghz = wm;
    m.magnon_coupling_ghz = {g};
    m.photon_linewidth_ghz = {0.0};
    return m;
}

HybridModel random_model(std::mt19937_64& rng, std::size_t n, double max_ratio) {
    std::uniform_real_distribution<double> freq(8.0, 16.0), unit(-1.0, 1.0);
    HybridModel m;
    for (std::size_t i = 0; i < n; ++i) m.photon_freq_ghz.push_back(freq(rng));
    m.magnon_freq_ghz = freq(rng);
    m.photon_coupling_ghz = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        m.magnon_coupling_ghz.push_back(max_ratio * 8.0 * unit(rng));
        m.photon_linewidth_ghz.push_back(0.01);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double c = 0.5 * max_ratio * 8.0 * unit(rng);
            m.photon_coupling_ghz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
            m.photon_coupling_ghz(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
        }
    }
    return m;
}

} // namespace

TEST_CASE("two-mode resonant splitting matches the quartic roots", "[hamiltonian]") {
    const auto set = eigen_full(two_mode(13.65, 13.65, 1.84));
    const auto roots = oracles::two_mode_quartic(13.65, 13.65, 1.84);
    REQUIRE(set.size() == 2);
    CHECK(set.frequencies_ghz[0] == Approx(roots[0]).epsilon(1e-9));
    CHECK(set.frequencies_ghz[1] == Approx(roots[1]).epsilon(1e-9));
    CHECK(set.frequencies_ghz[0] == Approx(11.6658).margin(5e-5));
    CHECK(set.frequencies_ghz[1] == Approx(15.3804).margin(5e-5));
    CHECK(set.frequencies_ghz[1] - set.frequencies_ghz[0] == Approx(3.7146).margin(1e-4));
    // 50/50 hybridisation on resonance.
    CHECK(set.magnon_fraction(0) == Approx(0.5).margin(0.02));
}

TEST_CASE("closed-form equivalence over random two-mode draws", "[hamiltonian][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> freq(1.0, 20.0), ratio(0.0, 0.999);
    for (int k = 0; k < 10000; ++k) {
        const double wc = freq(rng), wm = freq(rng);
        const double g = 0.5 * std::sqrt(ratio(rng) * wc * wm);  // 4 g^2 < wc wm
        const auto set = eigen_full(two_mode(wc, wm, g));
        const auto roots = oracles::two_mode_quartic(wc, wm, g);
        CHECK(set.frequencies_ghz[0] == Approx(roots[0]).epsilon(1e-9));
        CHECK(set.frequencies_ghz[1] == Approx(roots[1]).epsilon(1e-9));
    }
}

TEST_CASE("decoupling limits", "[hamiltonian]") {
    auto set = eigen_full(two_mode(13.65, 12.0, 0.0));
    CHECK(set.frequencies_ghz[0] == Approx(12.0).epsilon(1e-12));
    CHECK(set.frequencies_ghz[1] == Approx(13.65).epsilon(1e-12));

    // N=4 with g = 0: doublet split by G_RL, magnon untouched.
    const auto n4 = eigen_full(build_n4(13.65, 0.155, 0.0, 12.0));
    REQUIRE(n4.size() == 3);
    CHECK(n4.frequencies_ghz[0] == Approx(12.0).epsilon(1e-12));
    CHECK(n4.magnon_fraction(0) == Approx(1.0).epsilon(1e-12));
    const auto full_doublet = oracles::two_mode_quartic(13.65, 13.65, 0.155);
    CHECK(n4.frequencies_ghz[1] == Approx(full_doublet[0]).epsilon(1e-12));
    CHECK(n4.frequencies_ghz[2] == Approx(full_doublet[1]).epsilon(1e-12));

    const auto bare = eigen_full(build_n4(13.65, 0.0, 0.0, 12.0));
    CHECK(bare.frequencies_ghz[0] == Approx(12.0).epsilon(1e-12));
    CHECK(bare.frequencies_ghz[1] == Approx(13.65).epsilon(1e-12));
    CHECK(bare.frequencies_ghz[2] == Approx(13.65).epsilon(1e-12));
}

TEST_CASE("model builders", "[hamiltonian]") {
    const auto n4 = build_n4(13.65, 0.155, 1.84, 12.0);
    CHECK(n4.magnon_coupling_ghz[1] == 0.0);
    CHECK(n4.photon_coupling_ghz(0, 1) == 0.155);
    CHECK(n4.photon_freq_ghz == std::vector<double>{13.65, 13.65});
    CHECK_THROWS_AS(build_n4(-1.0, 0.1, 1.0, 12.0), InvalidArgument);

    const auto n8 = build_n8(11.20, 12.20, 13.65, 1.18 / 2, 1.46 / 2, 1.37 / 2, 12.04);
    CHECK(n8.photon_coupling_ghz.isZero());
    CHECK(n8.magnon_coupling_ghz[1] == Approx(0.73));
    CHECK_THROWS_AS(build_n8(11.2, 12.2, 13.65, 0.5, 0.5, 0.5, 0.0), InvalidArgument);

    const auto free = eigen_full(build_n8(11.20, 12.20, 13.65, 0.0, 0.0, 0.0, 12.04));
    const std::vector<double> expected{11.20, 12.04, 12.20, 13.65};
    for (std::size_t k = 0; k < 4; ++k) CHECK(free.frequencies_ghz[k] == Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("relabeling photon modes permutes fractions only", "[hamiltonian][property]") {
    const auto a = eigen_full(build_n8(11.20, 12.20, 13.65, 0.59, 0.73, 0.685, 12.04));
    const auto b = eigen_full(build_n8(13.65, 11.20, 12.20, 0.685, 0.59, 0.73, 12.04));
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(a.frequencies_ghz[k] == Approx(b.frequencies_ghz[k]).epsilon(1e-12));
        CHECK(a.fractions(static_cast<Eigen::Index>(k), 0) == Approx(b.fractions(static_cast<Eigen::Index>(k), 1)).margin(1e-10));
        CHECK(a.fractions(static_cast<Eigen::Index>(k), 2) == Approx(b.fractions(static_cast<Eigen::Index>(k), 0)).margin(1e-10));
        CHECK(a.magnon_fraction(k) == Approx(b.magnon_fraction(k)).margin(1e-10));
    }
}

TEST_CASE("instability is reported with offending modes", "[hamiltonian]") {
    const auto model = two_mode(13.65, 0.5, 1.84);  // 13.65 * 0.5 < 4 * 1.84^2
    try {
        eigen_full(model);
        FAIL("expected Instability");
    } catch (const Instability& e) {
        CHECK(e.offending_modes() == std::vector<std::size_t>{0, 1});
    }
    const auto set = solve_polaritons(model);
    CHECK_FALSE(set.stable);
    CHECK_FALSE(set.diagnosis.empty());

    // Stability boundary 4 g^2 = wc wm.
    const double g_crit = 0.5 * std::sqrt(13.65 * 12.0);
    CHECK(solve_polaritons(two_mode(13.65, 12.0, 0.999 * g_crit)).stable);
    CHECK_FALSE(solve_polaritons(two_mode(13.65, 12.0, 1.001 * g_crit)).stable);
}

TEST_CASE("near-singular models use the paired eigensolve", "[hamiltonian]") {
    const double wc = 13.65, wm = 12.0;
    const double g = 0.5 * std::sqrt(wc * wm) * (1.0 - 1e-12);
    const auto set = solve_polaritons(two_mode(wc, wm, g));
    REQUIRE(set.stable);
    const auto roots = oracles::two_mode_quartic(wc, wm, g);
    CHECK(set.frequencies_ghz[1] == Approx(roots[1]).epsilon(1e-9));
    CHECK(set.frequencies_ghz[0] < 1e-3);
}

TEST_CASE("rotating-wave solver", "[hamiltonian]") {
    const auto rwa = eigen_rwa(two_mode(13.65, 13.65, 1.84));
    CHECK(rwa.frequencies_ghz[1] - rwa.frequencies_ghz[0] == Approx(3.68).epsilon(1e-12));
    const auto full = eigen_full(two_mode(13.65, 13.65, 1.84));
    const double diff = (full.frequencies_ghz[1] - full.frequencies_ghz[0]) - 3.68;
    CHECK(diff == Approx(0.0346).margin(1e-4));

    const auto a = eigen_rwa(build_n4(13.65, 0.0, 0.0, 12.0));
    const auto b = eigen_full(build_n4(13.65, 0.0, 0.0, 12.0));
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.frequencies_ghz[k] == Approx(b.frequencies_ghz[k]).epsilon(1e-12));
}

TEST_CASE("Bloch-Siegert bound between full and RWA spectra", "[hamiltonian][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> freq(8.0, 16.0), ratio(0.0, 0.05);
    for (int k = 0; k < 2000; ++k) {
        const double wc = freq(rng), wm = freq(rng);
        const double w = std::min(wc, wm);
        const double g = ratio(rng) * w;
        const auto full = eigen_full(two_mode(wc, wm, g));
        const auto rwa = eigen_rwa(two_mode(wc, wm, g));
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(std::abs(full.frequencies_ghz[i] - rwa.frequencies_ghz[i]) / w < 3.0 * (g / w) * (g / w) + 1e-9);
    }
}

TEST_CASE("fractions and symplectic pairing on random models", "[hamiltonian][property]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto model = random_model(rng, 1 + static_cast<std::size_t>(rng() % 4), 0.15);
        const auto set = solve_polaritons(model);
        if (!set.stable) continue;
        for (Eigen::Index k = 0; k < set.fractions.rows(); ++k) {
            CHECK(set.fractions.row(k).sum() == Approx(1.0).epsilon(1e-9));
            CHECK(set.fractions.row(k).minCoeff() >= 0.0);
        }
        CHECK(std::is_sorted(set.frequencies_ghz.begin(), set.frequencies_ghz.end()));

        Eigen::EigenSolver<Eigen::MatrixXd> es(dynamical_matrix(model));
        std::vector<double> ev;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()(i).real());
        std::sort(ev.begin(), ev.end());
        const std::size_t n = ev.size();
        for (std::size_t i = 0; i < n / 2; ++i) {
            CHECK(ev[i] + ev[n - 1 - i] == Approx(0.0).margin(1e-10 * std::abs(ev[i])));
            CHECK(ev[n / 2 + i] == Approx(set.frequencies_ghz[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("N=4 reference branches show one avoided crossing and one flat doublet branch", "[hamiltonian][sweep]") {
    const auto model = build_n4(13.65, 0.155, 1.84, 13.65);
    const MagnonMode magnon{28.0, 0.0, 0.001};
    const auto fields = linspace(0.2, 0.8, 301);
    const auto branches = sweep(model, magnon, fields);
    REQUIRE(branches.n_stable() == fields.size());
    for (const auto& p : branches.points) REQUIRE(p.size() == 3);

    // The photon-like branch closest to w_c stays within G_RL of it over the whole sweep
    // (the L-like branch is the one with the smallest magnon fraction near w_c).
    for (const auto& p : branches.points) {
        double best = 1e9;
        for (std::size_t k = 0; k < 3; ++k) best = std::min(best, std::abs(p.frequencies_ghz[k] - 13.65));
        CHECK(best <= 0.155 + 1e-9);
    }
    // Branches 0 and 2 anticross with a gap near 2g.
    const auto gap = min_gap(branches, 0, 2);
    CHECK(gap.gap_ghz > 3.5);
    CHECK(gap.gap_ghz < 4.0);
    CHECK(std::abs(magnon_frequency(magnon, gap.field_t) - 13.65) < 0.5);

    // Far from resonance the photon branches are nearly bare.
    const auto far = solve_polaritons(tuned_model(model, magnon, resonance_field(magnon, 13.65 + 10 * 1.84)));
    for (std::size_t k = 0; k < 2; ++k) CHECK(far.magnon_fraction(k) < 0.05);
}

TEST_CASE("two-mode minimum gap", "[sweep]") {
    const MagnonMode magnon{28.0, 0.0, 0.0};
    const auto fields = linspace(0.3, 0.7, 4001);
    const auto b = sweep(two_mode(13.65, 1.0, 1.84), magnon, fields);
    const auto gap = min_gap(b, 0, 1);
    CHECK(gap.gap_ghz == Approx(3.7146).margin(2e-3));
    CHECK(gap.field_t == Approx(13.65 / 28.0).margin(0.01));

    const auto coarse = min_gap(sweep(two_mode(13.65, 1.0, 1.84), magnon, linspace(0.3, 0.7, 401)), 0, 1);
    CHECK(std::abs(coarse.gap_ghz - gap.gap_ghz) < 1e-3 * 28.0);

    const auto decoupled = min_gap(sweep(two_mode(13.65, 1.0, 0.0), magnon, linspace(0.3, 0.4, 11)), 0, 1);
    CHECK(decoupled.gap_ghz == Approx(13.65 - 28.0 * 0.4).epsilon(1e-12));
    CHECK_THROWS_AS(min_gap(b, 0, 2), InvalidArgument);
}

TEST_CASE("sweep flags unstable low-field points without dropping them", "[sweep]") {
    const MagnonMode magnon{28.0, 0.0, 0.0};
    const auto fields = linspace(0.0, 0.1, 11);
    const auto b = sweep(two_mode(13.65, 1.0, 1.84), magnon, fields);
    CHECK(b.points.size() == fields.size());
    CHECK_FALSE(b.points.front().stable);
    CHECK(b.points.back().stable);
    CHECK_THROWS_AS(sweep(two_mode(13.65, 1.0, 1.84), magnon, {0.3, 0.2}), InvalidArgument);
    CHECK_THROWS_AS(sweep(two_mode(13.65, 1.0, 1.84), magnon, {}), InvalidArgument);
}

TEST_CASE("sweep result does not depend on worker count", "[sweep]") {
    const auto model = build_n8(11.20, 12.20, 13.65, 0.59, 0.73, 0.685, 12.0);
    const MagnonMode magnon{28.0, 0.0, 0.001};
    const auto fields = linspace(0.2, 0.7, 97);
    setenv("MAGNON_HYBRID_THREADS", "1", 1);
    const auto serial = sweep(model, magnon, fields);
    setenv("MAGNON_HYBRID_THREADS", "4", 1);
    const auto threaded = sweep(model, magnon, fields);
    unsetenv("MAGNON_HYBRID_THREADS");
    for (std::size_t i = 0; i < fields.size(); ++i)
        CHECK(serial.points[i].frequencies_ghz == threaded.points[i].frequencies_ghz);
}
