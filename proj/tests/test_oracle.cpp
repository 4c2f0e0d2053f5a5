#include <cmath>
#include <numbers>

#include "doctest.h"
#include "entmux/oracle.hpp"
#include "entmux/quantum_core.hpp"
#include "entmux/sim/rng.hpp"

using namespace entmux;
using oracle::PairStatistics;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("analytic fringe endpoints") {
    CHECK(oracle::analytic_fringe(0, 0, 0, 1) == doctest::Approx(0.0));
    CHECK(oracle::analytic_fringe(kPi / 2, 0, 0, 1) == doctest::Approx(0.25));
    CHECK(oracle::analytic_fringe(0.3, 1.1, -0.4, 0) == doctest::Approx(0.125));
    CHECK_THROWS(oracle::analytic_fringe(0, 0, 0, 2.0));
}

TEST_CASE("brute force table: normalization bookkeeping and corners") {
    const auto table = oracle::brute_force_state_propagation(0.0, 0.0, 0.0);
    CHECK(table[1][1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(table[0][0] == doctest::Approx(1.0 / 16).epsilon(1e-12));
    CHECK(table[2][2] == doctest::Approx(1.0 / 16).epsilon(1e-12));
    CHECK(table[0][2] == doctest::Approx(0.0).epsilon(1e-12));

    // Corner entries are single-path: no phase can move them.
    for (const double phi : {0.1, 1.0, 2.5, 4.0}) {
        const auto t = oracle::brute_force_state_propagation(phi, 2 * phi, -phi);
        CHECK(t[0][0] == doctest::Approx(1.0 / 16).epsilon(1e-12));
        CHECK(t[2][2] == doctest::Approx(1.0 / 16).epsilon(1e-12));
    }
}

TEST_CASE("brute force equals the analyzer transform on 1000 random triples") {
    sim::RngStream rng(2024, 0, sim::Stage::generic);
    for (int trial = 0; trial < 1000; ++trial) {
        const double phi_p = rng.uniform() * 2 * kPi;
        const double phi_s = rng.uniform() * 2 * kPi;
        const double phi_i = rng.uniform() * 2 * kPi;
        const auto table = oracle::brute_force_state_propagation(phi_p, phi_s, phi_i);
        const auto dist = quantum::analyzer_transform(
            quantum::pair_state_from_pump(quantum::pump_after_umi(phi_p)), phi_s, phi_i,
            1.0);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double got = dist.probability(static_cast<quantum::ArrivalSlot>(i),
                                                    static_cast<quantum::ArrivalSlot>(j));
                CHECK(std::abs(got - table[i][j]) < 1e-12);
            }
        }
        // and the central entry equals the closed form
        CHECK(std::abs(table[1][1] - oracle::analytic_fringe(phi_p, phi_s, phi_i, 1.0)) <
              1e-12);
    }
}

TEST_CASE("thermal pair statistics closed forms") {
    // P(n >= 1) and P(n >= 2) at mu = 0.01
    const double mu = 0.01;
    CHECK(oracle::pair_probability(mu, PairStatistics::thermal) ==
          doctest::Approx(0.00990099).epsilon(1e-4));
    const double p1 = oracle::pair_probability(mu, PairStatistics::thermal);
    const double eps = oracle::epsilon_from_mu(mu, PairStatistics::thermal);
    CHECK(p1 * eps == doctest::Approx(9.8e-5).epsilon(0.01));  // P(n >= 2)

    // histogram cross-check
    sim::RngStream rng(7, 1, sim::Stage::generic);
    const int draws = 10000000;
    int ge1 = 0, ge2 = 0;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
        const int n = rng.thermal(mu);
        sum += n;
        ge1 += n >= 1;
        ge2 += n >= 2;
    }
    const double sigma1 = std::sqrt(p1 * draws);
    CHECK(std::abs(ge1 - p1 * draws) < 3 * sigma1);
    const double p2 = p1 * eps;
    CHECK(std::abs(ge2 - p2 * draws) < 3 * std::sqrt(p2 * draws) + 3);
    // mean within 3 sigma of mu
    const double var = mu * (1 + mu);
    CHECK(std::abs(sum / draws - mu) < 3 * std::sqrt(var / draws));
}

TEST_CASE("poisson epsilon reduces to mu/2 at small mu") {
    CHECK(oracle::epsilon_from_mu(0.0, PairStatistics::poisson) == 0.0);
    CHECK(oracle::epsilon_from_mu(1e-4, PairStatistics::poisson) ==
          doctest::Approx(5e-5).epsilon(1e-2));
}

TEST_CASE("analytic CAR: noise free limit is 2/mu and halves with doubled mu") {
    oracle::OracleParams p;
    p.mu = 0.02;
    p.eta_signal = 0.1;
    p.eta_idler = 0.1;
    p.raman_rate_signal = 0.0;
    p.raman_rate_idler = 0.0;
    p.dark_rate_hz = 0.0;
    const double car1 = oracle::analytic_car(p);
    CHECK(car1 == doctest::Approx(2.0 / p.mu).epsilon(0.03));
    p.mu = 0.04;
    const double car2 = oracle::analytic_car(p);
    CHECK(car2 == doctest::Approx(car1 / 2).epsilon(0.05));

    p.mu = 0.0;
    CHECK_THROWS(oracle::analytic_car(p));  // accidental floor vanishes
}

TEST_CASE("analytic CAR decreases monotonically in mu") {
    oracle::OracleParams p;
    p.eta_signal = 0.08;
    p.eta_idler = 0.08;
    p.raman_rate_signal = 0.015;
    p.raman_rate_idler = 0.015;
    p.dark_rate_hz = 100.0;
    double prev = 1e18;
    for (double mu = 0.02; mu < 0.25; mu *= 1.3) {
        p.mu = mu;
        const double car = oracle::analytic_car(p);
        CHECK(car < prev);
        prev = car;
    }
}

TEST_CASE("jitter averaged overlap") {
    CHECK(oracle::jitter_averaged_overlap(0.0, 1.9, 0.0) == doctest::Approx(1.0));
    CHECK(oracle::jitter_averaged_overlap(2 * 1.9, 1.9, 0.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    // Monte Carlo cross-check of the jitter average.
    const double sigma = 1.9, s = 1.2, delay = 1.0;
    sim::RngStream rng(11, 2, sim::Stage::generic);
    double acc = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        const double dt = delay + (rng.gaussian() - rng.gaussian()) * s;
        acc += std::exp(-dt * dt / (4 * sigma * sigma));
    }
    CHECK(oracle::jitter_averaged_overlap(delay, sigma, s) ==
          doctest::Approx(acc / n).epsilon(0.01));
}

TEST_CASE("analytic HOM visibility") {
    oracle::OracleParams p;
    p.mu = 1e-6;
    p.pair_jitter_sigma_ps = 0.0;
    const auto ideal = oracle::analytic_hom(0.0, p);
    CHECK(ideal.raw_visibility == doctest::Approx(1.0).epsilon(1e-5));

    p.mu = 0.2;
    const double eps = oracle::epsilon_from_mu(0.2, PairStatistics::thermal);
    const auto contaminated = oracle::analytic_hom(0.0, p);
    CHECK(contaminated.raw_visibility == doctest::Approx(1.0 - eps).epsilon(1e-9));
    // strictly decreasing in epsilon (via mu)
    double prev = 1.1;
    for (double mu : {0.01, 0.05, 0.1, 0.2, 0.4}) {
        p.mu = mu;
        const double v = oracle::analytic_hom(0.0, p).raw_visibility;
        CHECK(v < prev);
        prev = v;
    }
    // dip depth scales with the overlap at delay = 2 sigma
    p.mu = 1e-9;
    const auto far = oracle::analytic_hom(1e9, p);
    const auto at2s = oracle::analytic_hom(2 * p.coherence_sigma_ps, p);
    const double depth_ratio = (far.baseline_rate - at2s.dip_rate) /
                               (far.baseline_rate - oracle::analytic_hom(0.0, p).dip_rate);
    CHECK(depth_ratio == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    // dark subtraction raises the net above the raw
    p.mu = 0.2;
    const auto dark = oracle::analytic_hom(0.0, p, 0.1);
    CHECK(dark.net_visibility > dark.raw_visibility);
}

TEST_CASE("poisson accidental rate formula") {
    CHECK(oracle::poisson_accidentals(1000, 2000, 10, 1000) ==
          doctest::Approx(1000.0 * 2000 * 10 * 1e-9));
}

TEST_CASE("expected fringe visibility falls as the source dims into fixed darks") {
    oracle::OracleParams p;
    p.eta_signal = 1.0;
    p.eta_idler = 1.0;
    p.raman_rate_signal = 0.0;
    p.raman_rate_idler = 0.0;
    p.dark_rate_hz = 1e5;  // dominates the singles once mu is small enough
    p.v_cap = 1.0;
    double prev = -1.0;
    for (double mu : {1e-7, 3e-7, 1e-6, 1e-5, 1e-4}) {  // rising mu, darks fixed
        p.mu = mu;
        const double v = oracle::expected_fringe_visibility(p);
        CHECK(v > prev);
        prev = v;
    }
    CHECK(prev > 0.9);  // and the bright limit approaches the contrast cap
}
