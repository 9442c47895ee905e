#include <catch2/catch_amalgamated.hpp>

#include "magnon_hybrid/cavity_network.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

using namespace magnon_hybrid;
using Catch::Approx;

namespace {

CavityNetwork reference_ring4() { return ring_network(4, 13.0, -0.1 * 13.0 * 13.0); }

double doublet_gap(const CavityNetwork& net) {
    const auto s = solve_modes(net);
    return s.modes[2].frequency_ghz - s.modes[1].frequency_ghz;
}

} // namespace

TEST_CASE("single uncoupled post", "[cavity]") {
    CavityNetwork net{{10.0}, Eigen::MatrixXd::Zero(1, 1)};
    const auto s = solve_modes(net);
    REQUIRE(s.modes.size() == 1);
    CHECK(s.modes[0].frequency_ghz == Approx(10.0).epsilon(1e-15));
    CHECK(s.modes[0].pattern(0) == Approx(1.0));
    CHECK(s.modes[0].label == "↑");
    CHECK(s.fsr_list_ghz.empty());
}

TEST_CASE("ring frequencies match circulant eigenvalues", "[cavity]") {
    for (int n : {2, 3, 4, 5, 8}) {
        const double w0 = 13.0, kappa = -0.1 * w0 * w0;
        auto expected = oracles::ring_eigenvalues(n, w0, kappa);
        std::sort(expected.begin(), expected.end());
        const auto s = solve_modes(ring_network(n, w0, kappa));
        REQUIRE(s.modes.size() == static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            CHECK(s.modes[static_cast<std::size_t>(k)].frequency_ghz == Approx(std::sqrt(expected[static_cast<std::size_t>(k)])).epsilon(1e-12));
    }
}

TEST_CASE("four-post ring reproduces the discrete WGM sequence", "[cavity]") {
    const auto s = solve_modes(reference_ring4());
    REQUIRE(s.modes.size() == 4);
    CHECK(s.modes[0].label == "↑↑↑↑");
    CHECK(s.modes[3].label == "↑↓↑↓");
    // Doublet: exact degeneracy, sine/cosine gauge anchored on post 0.
    CHECK(std::abs(s.modes[2].frequency_ghz - s.modes[1].frequency_ghz) <= 1e-12 * s.modes[1].frequency_ghz);
    CHECK(s.modes[1].degenerate);
    CHECK(s.modes[2].degenerate);
    CHECK_FALSE(s.modes[0].degenerate);
    CHECK(s.modes[1].label == "↑0↓0");
    // Same current pattern as "0↓0↑" up to the overall sign fixed by the convention.
    CHECK(s.modes[2].label == "0↑0↓");
    CHECK(s.modes[1].frequency_ghz == Approx(13.0).epsilon(1e-12));
}

TEST_CASE("two-post ring gives dark and bright modes", "[cavity]") {
    const auto s = solve_modes(ring_network(2, 10.0, -5.0));
    CHECK(s.modes[0].label == "↑↑");
    CHECK(s.modes[1].label == "↑↓");
}

TEST_CASE("ring construction", "[cavity]") {
    const auto net = ring_network(4, 13.0, -2.0);
    CHECK((net.coupling.array() != 0.0).count() == 8);
    CHECK(solve_modes(ring_network(8, 13.0, -2.0)).modes.size() == 8);
    CHECK_THROWS_AS(ring_network(1, 13.0, -2.0), InvalidArgument);
}

TEST_CASE("mode invariants hold on random networks", "[cavity][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> freq(8.0, 16.0), coup(-8.0, 8.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 8);
        CavityNetwork net;
        for (int i = 0; i < n; ++i) net.post_freq_ghz.push_back(freq(rng));
        net.coupling = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) net.coupling(i, j) = net.coupling(j, i) = coup(rng);
        const auto s = solve_modes(net);

        Eigen::MatrixXd v(n, n);
        for (int k = 0; k < n; ++k) v.col(k) = s.modes[static_cast<std::size_t>(k)].pattern;
        CHECK((v.transpose() * v - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);

        double sum = 0.0;
        for (double g : s.fsr_list_ghz) {
            CHECK(g >= 0.0);
            sum += g;
        }
        CHECK(sum == Approx(s.modes.back().frequency_ghz - s.modes.front().frequency_ghz).epsilon(1e-12).margin(1e-12));
        for (const auto& m : s.modes) {
            CHECK(label_length(m.label) == static_cast<std::size_t>(n));
            CHECK(m.pattern.norm() == Approx(1.0).epsilon(1e-12));
        }

        // Relabeling the posts leaves the spectrum unchanged.
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        CavityNetwork shuffled = net;
        for (int i = 0; i < n; ++i) {
            shuffled.post_freq_ghz[static_cast<std::size_t>(i)] = net.post_freq_ghz[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
            for (int j = 0; j < n; ++j) shuffled.coupling(i, j) = net.coupling(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        }
        const auto s2 = solve_modes(shuffled);
        for (int k = 0; k < n; ++k)
            CHECK(s2.modes[static_cast<std::size_t>(k)].frequency_ghz ==
                  Approx(s.modes[static_cast<std::size_t>(k)].frequency_ghz).epsilon(1e-12));
    }
}

TEST_CASE("overcoupled network is non-physical", "[cavity]") {
    CHECK_THROWS_AS(solve_modes(ring_network(4, 1.0, -1.0)), NonPhysical);
}

TEST_CASE("network validation", "[cavity]") {
    CavityNetwork bad{{10.0, 11.0}, Eigen::MatrixXd::Zero(2, 2)};
    bad.coupling(0, 1) = 1.0;
    CHECK_THROWS_AS(solve_modes(bad), InvalidArgument);
    CavityNetwork diag{{10.0}, Eigen::MatrixXd::Ones(1, 1)};
    CHECK_THROWS_AS(solve_modes(diag), InvalidArgument);
    CavityNetwork negative{{-1.0}, Eigen::MatrixXd::Zero(1, 1)};
    CHECK_THROWS_AS(solve_modes(negative), InvalidArgument);
}

TEST_CASE("double chain duplicates the four-post chain spectrum without cross coupling", "[cavity]") {
    const auto s = solve_modes(double_chain_network(12.0, -20.0, 0.0));
    REQUIRE(s.modes.size() == 8);
    for (std::size_t k = 0; k < 8; k += 2) {
        CHECK(s.modes[k + 1].frequency_ghz == Approx(s.modes[k].frequency_ghz).epsilon(1e-12));
        CHECK(s.modes[k].degenerate);
    }
    std::set<std::string> labels;
    for (const auto& m : s.modes) labels.insert(double_chain_label(m));
    CHECK(labels.count("α↑↑↓↓β0000") == 1);
    CHECK(labels.count("α0000β↑↑↓↓") == 1);
}

TEST_CASE("cross coupling splits the centre-symmetric chain pairs", "[cavity]") {
    // The zero-order pair splits; the order-one pair stays D4 protected.
    double previous = 0.0;
    for (double cross : {-0.5, -1.0, -2.0, -4.0}) {
        const auto s = solve_modes(double_chain_network(12.0, -20.0, cross));
        // Lowest pair: alpha and beta uniform modes, now split.
        const double split = std::abs(s.modes[1].frequency_ghz - s.modes[0].frequency_ghz);
        CHECK(split > previous);
        previous = split;
    }
    const auto s = solve_modes(double_chain_network(12.0, -20.0, -2.0));
    std::set<std::string> labels;
    for (const auto& m : s.modes) labels.insert(double_chain_label(m));
    CHECK(labels.count("α↑↑↓↓β0000") == 1);
    CHECK(labels.count("α0000β↑↑↓↓") == 1);
}

TEST_CASE("WGM node counting", "[cavity]") {
    const auto s = solve_modes(reference_ring4());
    const std::vector<std::size_t> ring{0, 1, 2, 3};
    CHECK(wgm_order(s.modes[0], ring).node_count == 0);
    const auto doublet = wgm_order(s.modes[1], ring);
    CHECK(doublet.node_count == 2);
    CHECK(doublet.order == 2);
    CHECK(doublet.azimuthal_index == 1);
    CHECK(wgm_order(s.modes[2], ring).node_count == 2);
    CHECK(wgm_order(s.modes[3], ring).node_count == 4);
    CHECK_THROWS_AS(wgm_order(s.modes[0], {0, 1, 2}), InvalidArgument);
    CHECK_THROWS_AS(wgm_order(s.modes[0], {0, 1, 1, 2}), InvalidArgument);
}

TEST_CASE("symmetry breaking lifts the doublet monotonically", "[cavity]") {
    const auto ring = reference_ring4();
    CHECK(doublet_gap(perturb_symmetry(ring, 0.0)) == 0.0);
    const auto base = solve_modes(ring);
    const auto same = solve_modes(perturb_symmetry(ring, 0.0));
    for (std::size_t k = 0; k < 4; ++k) CHECK(same.modes[k].frequency_ghz == base.modes[k].frequency_ghz);

    const double g1 = doublet_gap(perturb_symmetry(ring, 0.01));
    const double g2 = doublet_gap(perturb_symmetry(ring, 0.02));
    CHECK(g1 > 0.0);
    CHECK(g2 > g1);
    double prev = 0.0;
    for (double eps : {0.001, 0.002, 0.005, 0.01, 0.02, 0.05}) {
        const double g = doublet_gap(perturb_symmetry(ring, eps));
        CHECK(g > prev);
        prev = g;
    }
    CHECK_THROWS_AS(perturb_symmetry(ring, 0.1), InvalidArgument);
    CHECK_THROWS_AS(perturb_symmetry(ring, -0.2), InvalidArgument);
}
