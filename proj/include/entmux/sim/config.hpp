#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "entmux/analysis.hpp"
#include "entmux/oracle.hpp"

namespace entmux::sim {

/// Configuration problems detected before a run starts (bad file, unknown
/// key, invariant violation). The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using PairStatistics = oracle::PairStatistics;

enum class SweepParameter { pump_phase, signal_phase, idler_phase };

struct SweepSpec {
    SweepParameter parameter = SweepParameter::pump_phase;
    double start_rad = 0.0;
    double stop_rad = 0.0;
    int points = 0;

    std::vector<double> values() const;  // inclusive of both endpoints
};

struct HomSpec {
    int slot_a = 0;  // 1-based time slots of the two interfering sources
    int slot_b = 0;
    double delay_start_ps = 0.0;
    double delay_stop_ps = 0.0;
    int points = 0;
    double extra_baseline_delay_ps = 0.0;  // optional far-delay reference point

    std::vector<double> delays() const;
};

enum class ScanType { mu, channel };

struct ScanSpec {
    ScanType type = ScanType::mu;
    double mu_start = 0.0;
    double mu_stop = 0.0;
    int points = 0;  // log-spaced for mu scans
};

/// Full apparatus description: timing, phases, emission statistics, noise,
/// losses and the RNG seed. Loaded from a flat `key = value` text file;
/// unknown keys are rejected.
struct ExperimentConfig {
    // Pulse train
    double rep_rate_mhz = 27.97;
    double slot_spacing_ns = 10.0;
    int n_slots = 3;
    double umi_imbalance_ns = 1.6;

    // Interferometer phases (radians); one pump phase per time slot.
    std::vector<double> pump_phase_rad = {0.0, 0.0, 0.0};
    double signal_phase_rad = 0.0;
    double idler_phase_rad = 0.0;
    double v_cap = 0.99;

    // Emission and noise
    double mu = 0.03;  // mean pairs per pulse per channel pair
    PairStatistics pair_statistics = PairStatistics::thermal;
    int max_pairs_per_pulse = 0;  // 0 = unbounded
    double raman_singles_rate = 0.015;  // per pulse per channel, each side
    std::map<int, double> raman_rate_per_pair;  // per-channel override
    double dark_rate_hz = 100.0;

    // Detection and counting
    double detector_jitter_sigma_ps = 50.0;
    double coincidence_window_ps = 1000.0;
    double switch_extinction_db = 30.0;  // may be +inf
    bool analyzers_present = true;  // false for the single-pass CAR setup

    // Temporal mode (HOM)
    double coherence_sigma_ps = 1.9;
    double pair_jitter_sigma_ps = 0.0;

    // Losses per slot path, keyed "t1", "t2", ...
    std::map<std::string, analysis::LossLedger> loss_paths;

    // Run shape
    double duration_s = 10.0;
    uint64_t rng_seed = 1;
    int pump_channel = 34;
    int channel_pair = 8;
    std::string grid_file;

    std::optional<SweepSpec> sweep;
    std::optional<HomSpec> hom;
    std::optional<ScanSpec> scan;

    // Derived quantities
    double period_ps() const { return 1.0e6 / rep_rate_mhz; }
    int64_t slot_spacing_ps() const { return static_cast<int64_t>(slot_spacing_ns * 1000.0 + 0.5); }
    int64_t imbalance_ps() const { return static_cast<int64_t>(umi_imbalance_ns * 1000.0 + 0.5); }
    int64_t accidental_offset_ps() const;  // one pump period, rounded
    int64_t pulses_for_duration(double seconds) const;

    /// Ledger for a slot (1-based): "t1", "t2", ... Missing ledger means a
    /// lossless path.
    const analysis::LossLedger* ledger_for_slot(int slot) const;
    double transmittance_for_slot(int slot) const;
    double raman_rate_for_pair(int pair_index) const;

    /// Enforce the structural invariants (slot packing, resolvable
    /// satellite peaks, non-negative rates). Throws ConfigError.
    void validate() const;

    /// Reference apparatus defaults (measured losses, rates, three slots).
    static ExperimentConfig defaults();
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::istream& in, const std::string& origin);

}  // namespace entmux::sim
