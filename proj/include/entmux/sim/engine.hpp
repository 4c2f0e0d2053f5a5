#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "entmux/sim/config.hpp"
#include "entmux/sim/counting.hpp"
#include "entmux/sim/records.hpp"
#include "entmux/sim/rng.hpp"

namespace entmux::sim {

struct PulseEvent {
    int64_t time_ps = 0;
    int slot = 1;  // 1-based
};

/// Deterministic pulse comb: period k contributes pulses at
/// round(k * period) + (slot-1) * spacing for every slot.
std::vector<PulseEvent> generate_pulse_schedule(const ExperimentConfig& config,
                                                int64_t n_periods);

/// Absolute time of one pulse (period index, 1-based slot).
int64_t pulse_time_ps(const ExperimentConfig& config, int64_t period, int slot);

/// Gate windows of the slot-demultiplexing switch network.
struct SwitchSchedule {
    double period_ps = 0.0;
    int64_t spacing_ps = 0;
    int n_slots = 1;
    int64_t electronic_delay_ps = 0;
    double leak_probability = 0.0;  // 10^(-extinction/10)

    static SwitchSchedule from_config(const ExperimentConfig& config);

    /// Scheduled output port for a time tag, or nullopt when the tag falls
    /// between gate windows.
    std::optional<int> scheduled_port(int64_t tag_ps) const;
};

/// Port assignment including crosstalk: returns the scheduled port, or an
/// adjacent one with the leak probability, or nullopt for an unrouted tag.
std::optional<int> route_time_slot(int64_t tag_ps, const SwitchSchedule& schedule,
                                   RngStream& rng);

/// Pair count for one pulse under the configured statistics; a cap > 0
/// truncates (all excess mass lands on the cap).
int emit_pairs(double mu, PairStatistics stats, int max_pairs, RngStream& rng);

/// Bernoulli thinning through a composed transmittance.
/// Throws std::invalid_argument outside [0, 1].
bool apply_loss(double transmittance, RngStream& rng);

/// Detection timestamp: Gaussian jitter added to the arrival time and
/// quantized to integer picoseconds (half-to-even), clamped at zero.
int64_t detect_time(int64_t arrival_ps, double jitter_sigma_ps, RngStream& rng);

/// Detector response to an arriving photon. `efficiency` is for standalone
/// use only: the engine composes detector efficiency into the loss ledger
/// and passes 1.0, so it is never applied twice.
std::optional<DetectionRecord> detect(int32_t detector, int64_t arrival_ps,
                                      PhotonOrigin origin,
                                      const ExperimentConfig& config, RngStream& rng,
                                      double efficiency = 1.0);

/// Detector-noise records over a duration: Poisson dark counts uniform in
/// time per detector, plus pulse-locked noise singles at the configured
/// per-pulse rate, split over the two emission bins (time-sorted per
/// detector on return). Rates are pre-loss; thin with apply_loss. The
/// engine disables the pulse-locked part here because its pulse sampler
/// already carries that noise.
std::map<int32_t, RecordStream> inject_noise(const ExperimentConfig& config,
                                             double duration_s,
                                             std::span<const int32_t> detectors,
                                             uint64_t stream_base,
                                             bool pulse_locked_noise = true);

// --- Experiment drivers -------------------------------------------------

struct CountingOptions {
    int64_t periods = 0;
    uint64_t stream_base = 0;  // decorrelates repeated runs inside one experiment
    bool central_filter_only = false;  // keep only central-slot records
    bool keep_streams = true;
    int workers = 1;
};

struct CountingResult {
    CountSummary summary;
    /// Per-detector record streams, time-sorted. Central-filtered when
    /// requested.
    std::map<int32_t, RecordStream> streams;
};

/// One fixed-configuration acquisition: the common pipeline behind the
/// fringe, CAR and isolation runs.
CountingResult run_counting(const ExperimentConfig& config, const CountingOptions& options);

/// Sum of coincidence matches between signal detectors of one slot and
/// idler detectors of every other slot (and vice versa).
int64_t cross_slot_coincidences(const ExperimentConfig& config,
                                const std::map<int32_t, RecordStream>& streams);

struct FringeCell {
    double phase_rad = 0.0;
    int slot = 1;
    int64_t coincidences = 0;
    int64_t accidentals = 0;
    double duration_s = 0.0;
};

struct FringeResult {
    std::vector<FringeCell> cells;  // sweep-major, slot-minor
    CountSummary totals;
};

/// Full pipeline per phase point: emission, analyzer sampling, routing,
/// loss, detection, noise, then central-central post-selected coincidence
/// counting per slot. Deterministic for a fixed seed and any worker count.
FringeResult run_fringe_experiment(const ExperimentConfig& config, const SweepSpec& sweep,
                                   int workers);

struct HomPoint {
    double delay_ps = 0.0;
    int64_t fourfold = 0;
    int64_t dark_fourfold = 0;  // sum of the two blocked-arm acquisitions
};

/// Four-fold interference between the two configured source slots: heralded
/// idlers meet at a 50:50 coupler; fourfold = both heralds and both coupler
/// outputs click. The dark level is measured by blocking each coupler arm
/// in turn.
std::vector<HomPoint> run_hom_experiment(const ExperimentConfig& config,
                                         std::span<const double> delays, int workers);

struct CarPoint {
    double sweep_value = 0.0;
    double car = 0.0;
    double car_oracle = 0.0;
    int64_t coincidences = 0;
    int64_t accidentals = 0;
};

/// CAR versus mu (log-spaced) or versus channel pair, with the analytic
/// expectation alongside.
std::vector<CarPoint> run_car_scan(const ExperimentConfig& config, int workers);

/// Oracle parameter view of a configuration for one slot path.
oracle::OracleParams oracle_params_for(const ExperimentConfig& config, int slot);

}  // namespace entmux::sim
