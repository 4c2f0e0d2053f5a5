#pragma once

#include <array>
#include <cstdint>

namespace entmux::sim {

/// Philox 4x32-10 counter-based generator. Output depends only on
/// (counter, key), so any pulse/stage combination can be evaluated in any
/// order, on any thread, with identical results.
struct Philox4x32 {
    static std::array<uint32_t, 4> block(std::array<uint32_t, 4> counter,
                                         std::array<uint32_t, 2> key);
};

/// Identifies what a draw is for, keeping streams for different purposes
/// disjoint. Values are part of the reproducibility contract: changing them
/// changes every seeded run.
enum class Stage : uint32_t {
    block_count = 1,
    block_positions = 2,
    pulse_outcome = 3,
    photon_timing = 4,
    routing = 5,
    dark_counts = 6,
    hom_pulse = 7,
    generic = 8,
};

/// Sequential draws for one (seed, stream, stage) triple; `stream` is
/// normally the absolute pulse index. Distinct triples never collide.
class RngStream {
public:
    RngStream(uint64_t seed, uint64_t stream, Stage stage)
        : seed_(seed), stream_(stream), stage_(static_cast<uint32_t>(stage)) {}

    uint64_t next_u64();

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform();
    /// Uniform in (0, 1].
    double uniform_pos();
    /// Standard normal (Box-Muller; caches the second variate).
    double gaussian();

    /// Poisson by CDF inversion; intended for small means (< ~80).
    int poisson(double mean);
    /// Poisson conditioned on being at least 1.
    int poisson_at_least_one(double mean);
    /// Bose-Einstein distributed pair count with the given mean.
    int thermal(double mean);
    /// Poisson-distributed pair count with the given mean (inversion).
    int poisson_pairs(double mean) { return poisson(mean); }
    /// Binomial(n, p) by CDF inversion walk.
    int binomial(int n, double p);
    /// True with probability p.
    bool bernoulli(double p) { return uniform() < p; }

private:
    uint64_t seed_;
    uint64_t stream_;
    uint32_t stage_;
    uint32_t draw_ = 0;
    std::array<uint32_t, 4> buffer_{};
    int buffered_ = 0;  // remaining 32-bit words in buffer_
    double cached_gaussian_ = 0.0;
    bool has_cached_gaussian_ = false;

    uint32_t next_u32();
};

}  // namespace entmux::sim
