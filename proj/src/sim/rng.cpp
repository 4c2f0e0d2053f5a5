#include "entmux/sim/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace entmux::sim {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<uint32_t, 4>& c, const std::array<uint32_t, 2>& k) {
    const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * c[0];
    const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * c[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<uint32_t, 4> Philox4x32::block(std::array<uint32_t, 4> counter,
                                          std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        philox_round(counter, key);
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return counter;
}

uint32_t RngStream::next_u32() {
    if (buffered_ == 0) {
        const std::array<uint32_t, 4> counter = {
            static_cast<uint32_t>(stream_),
            static_cast<uint32_t>(stream_ >> 32),
            stage_,
            draw_++,
        };
        const std::array<uint32_t, 2> key = {
            static_cast<uint32_t>(seed_),
            static_cast<uint32_t>(seed_ >> 32),
        };
        buffer_ = Philox4x32::block(counter, key);
        buffered_ = 4;
    }
    return buffer_[--buffered_];
}

uint64_t RngStream::next_u64() {
    const uint64_t hi = next_u32();
    const uint64_t lo = next_u32();
    return (hi << 32) | lo;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
    return 1.0 - uniform();
}

double RngStream::gaussian() {
    if (has_cached_gaussian_) {
        has_cached_gaussian_ = false;
        return cached_gaussian_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_gaussian_ = r * std::sin(theta);
    has_cached_gaussian_ = true;
    return r * std::cos(theta);
}

int RngStream::poisson(double mean) {
    if (mean < 0.0 || !std::isfinite(mean)) {
        throw std::invalid_argument("poisson mean must be finite and non-negative");
    }
    if (mean == 0.0) {
        return 0;
    }
    if (mean > 16.0) {
        // Sum of independent Poisson segments; exact for any mean and keeps
        // the CDF inversion below well-conditioned.
        const int segments = static_cast<int>(mean / 16.0) + 1;
        const double per = mean / segments;
        int total = 0;
        for (int s = 0; s < segments; ++s) {
            total += poisson(per);
        }
        return total;
    }
    const double u = uniform();
    double pmf = std::exp(-mean);
    double cdf = pmf;
    int k = 0;
    while (u >= cdf && k < 2000) {
        ++k;
        pmf *= mean / k;
        cdf += pmf;
    }
    return k;
}

int RngStream::poisson_at_least_one(double mean) {
    const double p0 = std::exp(-mean);
    // Invert the CDF conditioned on k >= 1.
    const double u = p0 + uniform() * (1.0 - p0);
    double pmf = p0;
    double cdf = p0;
    int k = 0;
    while (u >= cdf && k < 2000) {
        ++k;
        pmf *= mean / k;
        cdf += pmf;
    }
    return k < 1 ? 1 : k;
}

int RngStream::thermal(double mean) {
    if (mean < 0.0 || !std::isfinite(mean)) {
        throw std::invalid_argument("thermal mean must be finite and non-negative");
    }
    if (mean == 0.0) {
        return 0;
    }
    // P(n) = (1 - q) q^n with q = mean / (1 + mean): geometric inversion.
    const double q = mean / (1.0 + mean);
    const double u = uniform_pos();
    const double n = std::floor(std::log(u) / std::log(q));
    if (n < 0.0) {
        return 0;
    }
    if (n > 1e6) {
        return 1000000;
    }
    return static_cast<int>(n);
}

int RngStream::binomial(int n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0) {
        throw std::invalid_argument("invalid binomial parameters");
    }
    if (n == 0 || p == 0.0) {
        return 0;
    }
    if (p == 1.0) {
        return n;
    }
    const double u = uniform();
    const double ratio = p / (1.0 - p);
    double pmf = std::pow(1.0 - p, n);
    double cdf = pmf;
    int k = 0;
    while (u >= cdf && k < n) {
        ++k;
        pmf *= ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
        cdf += pmf;
    }
    return k;
}

}  // namespace entmux::sim
