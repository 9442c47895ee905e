#include <catch2/catch_amalgamated.hpp>

#include "magnon_hybrid/fock_oracle.hpp"
#include "oracles.hpp"

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

} // namespace

TEST_CASE("uncoupled oracle returns bare frequencies", "[fock]") {
    const auto e = fock_oracle(two_mode(13.65, 12.0, 0.0), 4);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == Approx(12.0).epsilon(1e-12));
    CHECK(e[1] == Approx(13.65).epsilon(1e-12));
}

TEST_CASE("oracle converges to the Bogoliubov spectrum", "[fock]") {
    const auto model = two_mode(13.65, 13.65, 1.84);
    const auto exact = oracles::two_mode_quartic(13.65, 13.65, 1.84);
    double previous = 1e9;
    for (int n : {6, 10, 14, 20}) {
        const auto e = fock_oracle(model, n);
        const double err = std::max(std::abs(e[0] - exact[0]), std::abs(e[1] - exact[1]));
        CHECK(err <= previous + 1e-12);
        previous = err;
    }
    CHECK(previous < 1e-6);
}

TEST_CASE("dense and Davidson paths agree", "[fock]") {
    const auto model = build_n4(13.65, 0.155, 1.84, 12.5);
    FockOptions dense;
    dense.dense_limit = 100000;
    FockOptions iterative;
    iterative.dense_limit = 0;
    const auto a = fock_oracle(model, 8, 0, dense);
    const auto b = fock_oracle(model, 8, 0, iterative);
    REQUIRE(a.size() == 3);
    REQUIRE(b.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a[k] == Approx(b[k]).margin(1e-7));
    const auto exact = eigen_full(model);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a[k] == Approx(exact.frequencies_ghz[k]).margin(2e-3));
}

TEST_CASE("oracle agrees with the Bogoliubov solver on random models", "[fock][property]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> freq(10.0, 15.0), coup(-0.5, 0.5);
    for (int trial = 0; trial < 5; ++trial) {
        HybridModel m;
        m.photon_freq_ghz = {freq(rng), freq(rng)};
        m.photon_coupling_ghz = Eigen::MatrixXd::Zero(2, 2);
        m.photon_coupling_ghz(0, 1) = m.photon_coupling_ghz(1, 0) = 0.5 * coup(rng);
        m.magnon_freq_ghz = freq(rng);
        m.magnon_coupling_ghz = {2.0 * coup(rng), 2.0 * coup(rng)};
        m.photon_linewidth_ghz = {0.0, 0.0};
        const auto e = fock_oracle(m, 10);
        const auto s = eigen_full(m);
        for (std::size_t k = 0; k < 3; ++k) CHECK(e[k] == Approx(s.frequencies_ghz[k]).margin(2e-3));
    }
}

TEST_CASE("oracle argument limits", "[fock]") {
    CHECK_THROWS_AS(fock_oracle(two_mode(13.65, 12.0, 1.0), 3), InvalidArgument);
    // (14+1)^6 > 1e6
    const auto big = build_n8(11.2, 12.2, 13.65, 0.5, 0.5, 0.5, 12.0);
    HybridModel five = big;
    five.photon_freq_ghz = {11, 12, 13, 14, 15};
    five.photon_coupling_ghz = Eigen::MatrixXd::Zero(5, 5);
    five.magnon_coupling_ghz = {0.1, 0.1, 0.1, 0.1, 0.1};
    five.photon_linewidth_ghz.assign(5, 0.0);
    CHECK_THROWS_AS(fock_oracle(five, 14), ResourceLimit);
}
