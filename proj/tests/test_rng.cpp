#include <cmath>
#include <cstdint>
#include <map>

#include "doctest.h"
#include "entmux/sim/rng.hpp"

using namespace entmux::sim;

TEST_CASE("philox blocks are deterministic and key/counter sensitive") {
    const auto a = Philox4x32::block({1, 2, 3, 4}, {5, 6});
    const auto b = Philox4x32::block({1, 2, 3, 4}, {5, 6});
    CHECK(a == b);
    CHECK(a != Philox4x32::block({1, 2, 3, 5}, {5, 6}));
    CHECK(a != Philox4x32::block({1, 2, 3, 4}, {5, 7}));
}

TEST_CASE("streams with different ids are independent, same ids identical") {
    RngStream s1(42, 7, Stage::pulse_outcome);
    RngStream s2(42, 7, Stage::pulse_outcome);
    RngStream s3(42, 8, Stage::pulse_outcome);
    RngStream s4(42, 7, Stage::block_count);
    bool all_equal_34 = true;
    for (int i = 0; i < 16; ++i) {
        const uint64_t v = s1.next_u64();
        CHECK(v == s2.next_u64());
        all_equal_34 &= v == s3.next_u64();
        all_equal_34 &= v == s4.next_u64();
    }
    CHECK_FALSE(all_equal_34);
}

TEST_CASE("uniform moments") {
    RngStream st(1, 0, Stage::generic);
    const int n = 500000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = st.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sq += u * u;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.005));
    CHECK(var == doctest::Approx(1.0 / 12).epsilon(0.01));
}

TEST_CASE("gaussian sample statistics") {
    RngStream st(2, 0, Stage::generic);
    const int n = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = st.gaussian();
        sum += g;
        sq += g * g;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.01));
    CHECK(std::sqrt(sq / n) == doctest::Approx(1.0).epsilon(0.005));
}

TEST_CASE("poisson inversion matches mean and variance") {
    RngStream st(3, 0, Stage::generic);
    const double lam = 4.2;
    const int n = 300000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const int k = st.poisson(lam);
        sum += k;
        sq += static_cast<double>(k) * k;
    }
    const double mean = sum / n;
    CHECK(mean == doctest::Approx(lam).epsilon(0.01));
    CHECK(sq / n - mean * mean == doctest::Approx(lam).epsilon(0.02));
    CHECK(st.poisson(0.0) == 0);
}

TEST_CASE("poisson conditioned on at least one") {
    RngStream st(4, 0, Stage::generic);
    const double lam = 0.01;
    // P(k = 1 | k >= 1) = lam e^-lam / (1 - e^-lam) ~ 0.995
    int ones = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const int k = st.poisson_at_least_one(lam);
        CHECK(k >= 1);
        ones += k == 1;
    }
    CHECK(static_cast<double>(ones) / n == doctest::Approx(0.995).epsilon(0.005));
}

TEST_CASE("binomial inversion") {
    RngStream st(5, 0, Stage::generic);
    const int trials = 200000;
    const int n = 256;
    const double p = 0.01;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < trials; ++i) {
        const int k = st.binomial(n, p);
        sum += k;
        sq += static_cast<double>(k) * k;
    }
    const double mean = sum / trials;
    CHECK(mean == doctest::Approx(n * p).epsilon(0.01));
    CHECK(sq / trials - mean * mean == doctest::Approx(n * p * (1 - p)).epsilon(0.03));
    CHECK(st.binomial(0, 0.5) == 0);
    CHECK(st.binomial(10, 0.0) == 0);
    CHECK(st.binomial(10, 1.0) == 10);
}
