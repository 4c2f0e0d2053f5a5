#include "entmux/sim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include "entmux/quantum_core.hpp"

namespace entmux::sim {

namespace {

constexpr int64_t kBlock = 256;           // pulses per activity block
constexpr int64_t kChunk = 1 << 20;       // pulses per worker task (block-aligned)
constexpr double kBlockPathMaxMean = 24.0;  // above this, sample every pulse
constexpr uint64_t kPointStreamShift = 40;  // run index lives above the pulse bits

int resolve_workers(int workers) {
    if (workers > 0) {
        return workers;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_tasks(int64_t n_tasks, int workers, const std::function<void(int64_t)>& fn) {
    workers = std::min<int64_t>(resolve_workers(workers), n_tasks);
    if (workers <= 1) {
        for (int64_t t = 0; t < n_tasks; ++t) {
            fn(t);
        }
        return;
    }
    std::atomic<int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int64_t t = next.fetch_add(1);
                if (t >= n_tasks) {
                    return;
                }
                fn(t);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

// Scan ordinals [begin, end) whose outcomes are non-trivial with probability
// p_any each. Blocks of 256 draw a binomial count and member positions, so
// quiet stretches cost one draw per block; the distribution is identical to
// per-pulse Bernoulli gating. Chunks are block-aligned, so any partition of
// the range reproduces the same outcomes.
template <typename StreamOf, typename OnActive>
void scan_range(uint64_t seed, int64_t begin, int64_t end, double p_any,
                StreamOf&& stream_of, OnActive&& on_active) {
    if (p_any <= 0.0) {
        return;
    }
    if (p_any * kBlock > kBlockPathMaxMean) {
        for (int64_t k = begin; k < end; ++k) {
            RngStream st(seed, stream_of(k), Stage::pulse_outcome);
            if (st.uniform() < p_any) {
                on_active(k, st);
            }
        }
        return;
    }
    for (int64_t lo = begin - (begin % kBlock); lo < end; lo += kBlock) {
        const int64_t first = std::max(lo, begin);
        const int64_t last = std::min(lo + kBlock, end);
        const int n = static_cast<int>(last - first);
        RngStream bs(seed, stream_of(first), Stage::block_count);
        const int m = bs.binomial(n, p_any);
        if (m == 0) {
            continue;
        }
        // m distinct offsets, ascending.
        uint64_t mask[4] = {0, 0, 0, 0};
        int placed = 0;
        while (placed < m) {
            int idx = static_cast<int>(bs.uniform() * n);
            if (idx >= n) {
                idx = n - 1;
            }
            const uint64_t bit = 1ull << (idx & 63);
            if (mask[idx >> 6] & bit) {
                continue;
            }
            mask[idx >> 6] |= bit;
            ++placed;
        }
        for (int idx = 0; idx < n; ++idx) {
            if (mask[idx >> 6] & (1ull << (idx & 63))) {
                const int64_t k = first + idx;
                RngStream st(seed, stream_of(k), Stage::pulse_outcome);
                on_active(k, st);
            }
        }
    }
}

// Which of several independent components are non-empty, conditioned on at
// least one being non-empty. empties[i] = P(component i empty);
// suffix[i] = 1 - prod_{j >= i} empties[j].
uint32_t sample_union_mask(std::span<const double> empties, std::span<const double> suffix,
                           RngStream& st) {
    uint32_t mask = 0;
    bool forced = true;
    for (size_t i = 0; i < empties.size(); ++i) {
        if (empties[i] >= 1.0) {
            continue;
        }
        bool present;
        if (forced) {
            present = st.uniform() * suffix[i] < (1.0 - empties[i]);
            if (present) {
                forced = false;
            }
        } else {
            present = st.uniform() < (1.0 - empties[i]);
        }
        if (present) {
            mask |= 1u << i;
        }
    }
    return mask;
}

// Pre-detection joint arrival-position probabilities of one pair.
struct JointTable {
    double p[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
};

JointTable analyzer_joint_table(double pump_phase, double phi_s, double phi_i, double v) {
    const auto dist = quantum::analyzer_transform(
        quantum::pair_state_from_pump(quantum::pump_after_umi(pump_phase)), phi_s, phi_i, v);
    JointTable t;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            t.p[i][j] = dist.probability(static_cast<quantum::ArrivalSlot>(i),
                                         static_cast<quantum::ArrivalSlot>(j));
        }
    }
    return t;
}

// Without analyzers both photons share the creation bin.
JointTable bin_joint_table() {
    JointTable t;
    t.p[0][0] = 0.5;
    t.p[1][1] = 0.5;
    return t;
}

// Detected outcome of one pair after loss thinning: 0..8 both photons
// detected at (pos_s, pos_i) = (c/3, c%3); 9..11 signal only; 12..14 idler
// only; 15 nothing.
struct PairCategories {
    std::array<double, 15> cdf{};  // cumulative over the non-none categories
    double p_none = 1.0;
};

PairCategories thin_pair(const JointTable& t, double eta_s, double eta_i) {
    std::array<double, 15> p{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            p[static_cast<size_t>(3 * i + j)] = t.p[i][j] * eta_s * eta_i;
            p[static_cast<size_t>(9 + i)] += t.p[i][j] * eta_s * (1.0 - eta_i);
            p[static_cast<size_t>(12 + j)] += t.p[i][j] * (1.0 - eta_s) * eta_i;
        }
    }
    PairCategories out;
    double cum = 0.0;
    for (size_t c = 0; c < 15; ++c) {
        cum += p[c];
        out.cdf[c] = cum;
    }
    out.p_none = 1.0 - cum;
    return out;
}

int sample_category(const PairCategories& cat, double u) {
    // u must lie in [0, limit) with limit <= 1; values beyond the detected
    // mass mean "none" (15).
    for (size_t c = 0; c < 15; ++c) {
        if (u < cat.cdf[c]) {
            return static_cast<int>(c);
        }
    }
    return 15;
}

// Pair-number pmf with an optional cap (excess mass lands on the cap).
std::vector<double> pair_pmf(double mu, PairStatistics stats, int max_pairs) {
    std::vector<double> pmf;
    if (mu <= 0.0) {
        pmf.push_back(1.0);
        return pmf;
    }
    double cum = 0.0;
    if (stats == PairStatistics::thermal) {
        const double q = mu / (1.0 + mu);
        double p = 1.0 - q;
        for (int n = 0; n < 400; ++n) {
            pmf.push_back(p);
            cum += p;
            if (1.0 - cum < 1e-15 && n >= 1) {
                break;
            }
            p *= q;
        }
    } else {
        double p = std::exp(-mu);
        for (int n = 0; n < 400; ++n) {
            pmf.push_back(p);
            cum += p;
            if (1.0 - cum < 1e-15 && n >= 1) {
                break;
            }
            p *= mu / (n + 1);
        }
    }
    pmf.back() += std::max(0.0, 1.0 - cum);
    if (max_pairs > 0 && static_cast<int>(pmf.size()) > max_pairs + 1) {
        double tail = 0.0;
        for (size_t n = static_cast<size_t>(max_pairs); n < pmf.size(); ++n) {
            tail += pmf[n];
        }
        pmf.resize(static_cast<size_t>(max_pairs) + 1);
        pmf.back() = tail;
    }
    return pmf;
}

// Everything needed to sample the detected outcome of one pulse in one slot.
struct SlotScan {
    int slot = 1;
    PairCategories first;   // first pair: coherent analyzer table
    PairCategories extra;   // later pairs: phase-randomized
    std::vector<double> pmf;           // pair number
    double pair_some = 0.0;            // P(pair part yields any detection)
    std::vector<double> n_cond_cdf;    // P(n <= k | pair part detected), k >= 1
    std::vector<double> pow_extra_none;
    double lam_raman_s = 0.0;  // detected noise clicks per pulse, signal side
    double lam_raman_i = 0.0;
    std::array<double, 3> raman_pos_cdf{};  // position of a detected noise click
    double p_any = 0.0;
    std::array<double, 3> empties{};
    std::array<double, 3> suffix{};
};

SlotScan build_slot_scan(const ExperimentConfig& config, int slot, double pump_phase,
                         double phi_s, double phi_i) {
    SlotScan s;
    s.slot = slot;
    const double eta_path = config.transmittance_for_slot(slot);
    const double eta_s = eta_path;
    const double eta_i = eta_path;

    const JointTable first_table =
        config.analyzers_present ? analyzer_joint_table(pump_phase, phi_s, phi_i, config.v_cap)
                                 : bin_joint_table();
    const JointTable extra_table =
        config.analyzers_present ? analyzer_joint_table(pump_phase, phi_s, phi_i, 0.0)
                                 : bin_joint_table();
    s.first = thin_pair(first_table, eta_s, eta_i);
    s.extra = thin_pair(extra_table, eta_s, eta_i);

    s.pmf = pair_pmf(config.mu, config.pair_statistics, config.max_pairs_per_pulse);
    const size_t n_max = s.pmf.size() - 1;
    s.pow_extra_none.resize(n_max + 1);
    s.pow_extra_none[0] = 1.0;
    for (size_t m = 1; m <= n_max; ++m) {
        s.pow_extra_none[m] = s.pow_extra_none[m - 1] * s.extra.p_none;
    }
    double p_none_total = s.pmf[0];
    for (size_t n = 1; n <= n_max; ++n) {
        p_none_total += s.pmf[n] * s.first.p_none * s.pow_extra_none[n - 1];
    }
    s.pair_some = std::max(0.0, 1.0 - p_none_total);
    s.n_cond_cdf.assign(n_max + 1, 0.0);
    double cum = 0.0;
    for (size_t n = 1; n <= n_max; ++n) {
        const double det = 1.0 - s.first.p_none * s.pow_extra_none[n - 1];
        cum += s.pair_some > 0.0 ? s.pmf[n] * det / s.pair_some : 0.0;
        s.n_cond_cdf[n] = cum;
    }

    const double raman_rate = config.raman_rate_for_pair(config.channel_pair);
    if (config.analyzers_present) {
        // An analyzer passes a noise photon to the monitored port with
        // probability 1/2, spread 1:2:1 over the arrival positions.
        s.lam_raman_s = raman_rate * 0.5 * eta_s;
        s.lam_raman_i = raman_rate * 0.5 * eta_i;
        s.raman_pos_cdf = {0.25, 0.75, 1.0};
    } else {
        s.lam_raman_s = raman_rate * eta_s;
        s.lam_raman_i = raman_rate * eta_i;
        s.raman_pos_cdf = {0.5, 1.0, 1.0};
    }

    s.empties = {1.0 - s.pair_some, std::exp(-s.lam_raman_s), std::exp(-s.lam_raman_i)};
    double prod = 1.0;
    for (int i = 2; i >= 0; --i) {
        prod *= s.empties[static_cast<size_t>(i)];
        s.suffix[static_cast<size_t>(i)] = 1.0 - prod;
    }
    s.p_any = s.suffix[0];
    return s;
}

int sample_conditional_pair_count(const SlotScan& s, RngStream& st) {
    const double u = st.uniform();
    const auto it = std::upper_bound(s.n_cond_cdf.begin() + 1, s.n_cond_cdf.end(), u);
    return static_cast<int>(std::distance(s.n_cond_cdf.begin(),
                                          it == s.n_cond_cdf.end() ? it - 1 : it));
}

struct TaskOut {
    std::vector<RecordStream> streams;  // by detector id
    std::vector<int64_t> singles;
    int64_t routed = 0;
    int64_t leaked = 0;
};

struct ScanShared {
    const ExperimentConfig* config;
    SwitchSchedule schedule;
    int64_t imbalance_ps;
    double jitter_sigma;
    bool central_only;
    bool keep_streams;
    int n_detectors;
};

void emit_record(const ScanShared& sh, TaskOut& out, RngStream& st, int slot, int pos,
                 int64_t pulse_time, bool is_signal, PhotonOrigin origin) {
    const int64_t arrival = pulse_time + pos * sh.imbalance_ps;
    const int64_t tag = detect_time(arrival, sh.jitter_sigma, st);
    int port = slot;
    if (sh.schedule.leak_probability > 0.0 && sh.config->n_slots > 1 &&
        st.uniform() < sh.schedule.leak_probability) {
        if (slot == 1) {
            port = 2;
        } else if (slot == sh.config->n_slots) {
            port = slot - 1;
        } else {
            port = st.uniform() < 0.5 ? slot - 1 : slot + 1;
        }
        ++out.leaked;
    }
    ++out.routed;
    const int32_t det = is_signal ? signal_detector(port) : idler_detector(port);
    ++out.singles[static_cast<size_t>(det)];
    if (!sh.keep_streams) {
        return;
    }
    if (sh.central_only && !(pos == 1 && port == slot)) {
        return;
    }
    out.streams[static_cast<size_t>(det)].push_back(DetectionRecord{det, tag, origin});
}

void sample_pulse(const ScanShared& sh, const SlotScan& s, int64_t pulse_time,
                  RngStream& st, TaskOut& out) {
    const uint32_t mask = sample_union_mask(s.empties, s.suffix, st);

    if (mask & 1u) {  // pair part
        const int n = sample_conditional_pair_count(s, st);
        bool got = false;
        for (int k = 1; k <= n; ++k) {
            const PairCategories& cat = (k == 1) ? s.first : s.extra;
            int c;
            if (got) {
                c = sample_category(cat, st.uniform());
            } else {
                // Condition on a detection somewhere in pairs k..n.
                const double q_rest =
                    cat.p_none * s.pow_extra_none[static_cast<size_t>(n - k)];
                const double u = st.uniform() * (1.0 - q_rest);
                c = sample_category(cat, u);
            }
            if (c == 15) {
                continue;
            }
            got = true;
            if (c < 9) {
                emit_record(sh, out, st, s.slot, c / 3, pulse_time, true,
                            PhotonOrigin::signal);
                emit_record(sh, out, st, s.slot, c % 3, pulse_time, false,
                            PhotonOrigin::idler);
            } else if (c < 12) {
                emit_record(sh, out, st, s.slot, c - 9, pulse_time, true,
                            PhotonOrigin::signal);
            } else {
                emit_record(sh, out, st, s.slot, c - 12, pulse_time, false,
                            PhotonOrigin::idler);
            }
        }
    }
    for (int side = 0; side < 2; ++side) {  // detected noise singles
        if (!(mask & (side == 0 ? 2u : 4u))) {
            continue;
        }
        const double lam = side == 0 ? s.lam_raman_s : s.lam_raman_i;
        const int count = st.poisson_at_least_one(lam);
        for (int r = 0; r < count; ++r) {
            const double u = st.uniform();
            const int pos = u < s.raman_pos_cdf[0] ? 0 : (u < s.raman_pos_cdf[1] ? 1 : 2);
            emit_record(sh, out, st, s.slot, pos, pulse_time, side == 0,
                        PhotonOrigin::raman);
        }
    }
}

std::optional<std::pair<int, int>> classify_tag(const ExperimentConfig& config,
                                                int64_t tag, int64_t half_window) {
    const double period = config.period_ps();
    int64_t k = static_cast<int64_t>(std::floor(static_cast<double>(tag) / period));
    auto base = [&](int64_t n) { return static_cast<int64_t>(std::nearbyint(n * period)); };
    while (k > 0 && base(k) > tag) {
        --k;
    }
    while (base(k + 1) <= tag) {
        ++k;
    }
    const int64_t local = tag - base(k);
    const int64_t spacing = config.slot_spacing_ps();
    int slot = static_cast<int>(local / spacing) + 1;
    slot = std::min(slot, config.n_slots);
    const int64_t rel = local - static_cast<int64_t>(slot - 1) * spacing;
    const int64_t imb = config.imbalance_ps();
    const int max_pos = config.analyzers_present ? 2 : 1;
    int pos = static_cast<int>((rel + imb / 2) / imb);
    if (pos > max_pos) {
        pos = max_pos;
    }
    if (std::llabs(rel - pos * imb) > half_window) {
        return std::nullopt;
    }
    return std::make_pair(slot, pos);
}

}  // namespace

int64_t pulse_time_ps(const ExperimentConfig& config, int64_t period, int slot) {
    return static_cast<int64_t>(std::nearbyint(period * config.period_ps())) +
           static_cast<int64_t>(slot - 1) * config.slot_spacing_ps();
}

std::vector<PulseEvent> generate_pulse_schedule(const ExperimentConfig& config,
                                                int64_t n_periods) {
    config.validate();
    std::vector<PulseEvent> out;
    out.reserve(static_cast<size_t>(n_periods * config.n_slots));
    for (int64_t k = 0; k < n_periods; ++k) {
        for (int slot = 1; slot <= config.n_slots; ++slot) {
            out.push_back(PulseEvent{pulse_time_ps(config, k, slot), slot});
        }
    }
    return out;
}

SwitchSchedule SwitchSchedule::from_config(const ExperimentConfig& config) {
    SwitchSchedule s;
    s.period_ps = config.period_ps();
    s.spacing_ps = config.slot_spacing_ps();
    s.n_slots = config.n_slots;
    s.leak_probability = std::isinf(config.switch_extinction_db)
                             ? 0.0
                             : std::pow(10.0, -config.switch_extinction_db / 10.0);
    return s;
}

std::optional<int> SwitchSchedule::scheduled_port(int64_t tag_ps) const {
    const int64_t t = tag_ps - electronic_delay_ps;
    int64_t k = static_cast<int64_t>(std::floor(static_cast<double>(t) / period_ps));
    auto base = [&](int64_t n) { return static_cast<int64_t>(std::nearbyint(n * period_ps)); };
    while (k > 0 && base(k) > t) {
        --k;
    }
    while (base(k + 1) <= t) {
        ++k;
    }
    const int64_t local = t - base(k);
    const int64_t slot = local / spacing_ps;
    if (slot >= n_slots || local < 0) {
        return std::nullopt;  // between the last gate and the next period
    }
    return static_cast<int>(slot) + 1;
}

std::optional<int> route_time_slot(int64_t tag_ps, const SwitchSchedule& schedule,
                                   RngStream& rng) {
    const auto port = schedule.scheduled_port(tag_ps);
    if (!port) {
        return std::nullopt;
    }
    if (schedule.leak_probability > 0.0 && schedule.n_slots > 1 &&
        rng.uniform() < schedule.leak_probability) {
        if (*port == 1) {
            return 2;
        }
        if (*port == schedule.n_slots) {
            return *port - 1;
        }
        return rng.uniform() < 0.5 ? *port - 1 : *port + 1;
    }
    return port;
}

int emit_pairs(double mu, PairStatistics stats, int max_pairs, RngStream& rng) {
    if (!(mu >= 0.0)) {
        throw std::invalid_argument("mu must be non-negative");
    }
    const int n = stats == PairStatistics::thermal ? rng.thermal(mu) : rng.poisson(mu);
    return max_pairs > 0 ? std::min(n, max_pairs) : n;
}

bool apply_loss(double transmittance, RngStream& rng) {
    if (!(transmittance >= 0.0 && transmittance <= 1.0)) {
        throw std::invalid_argument("transmittance must lie in [0, 1]");
    }
    return rng.uniform() < transmittance;
}

int64_t detect_time(int64_t arrival_ps, double jitter_sigma_ps, RngStream& rng) {
    if (jitter_sigma_ps == 0.0) {
        return arrival_ps;
    }
    const double jitter = rng.gaussian() * jitter_sigma_ps;
    const int64_t tag =
        arrival_ps + static_cast<int64_t>(std::nearbyint(jitter));
    return tag < 0 ? 0 : tag;
}

std::optional<DetectionRecord> detect(int32_t detector, int64_t arrival_ps,
                                      PhotonOrigin origin,
                                      const ExperimentConfig& config, RngStream& rng,
                                      double efficiency) {
    if (efficiency < 1.0 && !apply_loss(efficiency, rng)) {
        return std::nullopt;
    }
    return DetectionRecord{detector,
                           detect_time(arrival_ps, config.detector_jitter_sigma_ps, rng),
                           origin};
}

std::map<int32_t, RecordStream> inject_noise(const ExperimentConfig& config,
                                             double duration_s,
                                             std::span<const int32_t> detectors,
                                             uint64_t stream_base,
                                             bool pulse_locked_noise) {
    std::map<int32_t, RecordStream> out;
    const double duration_ps = duration_s * 1e12;
    const int64_t periods = config.pulses_for_duration(duration_s);
    const double raman = config.raman_rate_for_pair(config.channel_pair);
    for (const int32_t det : detectors) {
        RngStream st(config.rng_seed, stream_base | static_cast<uint64_t>(det),
                     Stage::dark_counts);
        RecordStream& stream = out[det];
        const int darks = st.poisson(config.dark_rate_hz * duration_s);
        for (int i = 0; i < darks; ++i) {
            const int64_t tag = static_cast<int64_t>(st.uniform() * duration_ps);
            stream.push_back(DetectionRecord{det, tag, PhotonOrigin::dark});
        }
        if (pulse_locked_noise && raman > 0.0 && periods > 0) {
            const int slot = det / 2 + 1;
            const int count = st.poisson(raman * static_cast<double>(periods));
            for (int i = 0; i < count; ++i) {
                const int64_t k = static_cast<int64_t>(st.uniform() * periods);
                const int bin = st.uniform() < 0.5 ? 0 : 1;
                const int64_t tag = detect_time(
                    pulse_time_ps(config, k, slot) + bin * config.imbalance_ps(),
                    config.detector_jitter_sigma_ps, st);
                stream.push_back(DetectionRecord{det, tag, PhotonOrigin::raman});
            }
        }
        std::sort(stream.begin(), stream.end(),
                  [](const DetectionRecord& a, const DetectionRecord& b) {
                      return a.time_tag_ps < b.time_tag_ps;
                  });
    }
    return out;
}

CountingResult run_counting(const ExperimentConfig& config, const CountingOptions& options) {
    config.validate();

    ScanShared sh;
    sh.config = &config;
    sh.schedule = SwitchSchedule::from_config(config);
    sh.imbalance_ps = config.imbalance_ps();
    sh.jitter_sigma = config.detector_jitter_sigma_ps;
    sh.central_only = options.central_filter_only;
    sh.keep_streams = options.keep_streams;
    sh.n_detectors = 2 * config.n_slots;

    std::vector<SlotScan> scans;
    scans.reserve(static_cast<size_t>(config.n_slots));
    for (int slot = 1; slot <= config.n_slots; ++slot) {
        scans.push_back(build_slot_scan(config, slot,
                                        config.pump_phase_rad[static_cast<size_t>(slot - 1)],
                                        config.signal_phase_rad, config.idler_phase_rad));
    }

    const int64_t periods = options.periods;
    const int64_t chunks_per_slot = (periods + kChunk - 1) / kChunk;
    const int64_t n_tasks = chunks_per_slot * config.n_slots;
    std::vector<TaskOut> results(static_cast<size_t>(n_tasks));

    parallel_tasks(n_tasks, options.workers, [&](int64_t task) {
        const int slot_idx = static_cast<int>(task / chunks_per_slot);
        const int64_t chunk = task % chunks_per_slot;
        const SlotScan& scan = scans[static_cast<size_t>(slot_idx)];
        TaskOut& out = results[static_cast<size_t>(task)];
        out.streams.resize(static_cast<size_t>(sh.n_detectors));
        out.singles.assign(static_cast<size_t>(sh.n_detectors), 0);

        const int64_t begin = chunk * kChunk;
        const int64_t end = std::min(begin + kChunk, periods);
        const int n_slots = config.n_slots;
        const uint64_t base = options.stream_base;
        scan_range(
            config.rng_seed, begin, end, scan.p_any,
            [&](int64_t k) {
                return base | (static_cast<uint64_t>(k) * n_slots +
                               static_cast<uint64_t>(slot_idx));
            },
            [&](int64_t k, RngStream& st) {
                sample_pulse(sh, scan, pulse_time_ps(config, k, scan.slot), st, out);
            });
    });

    CountingResult result;
    result.summary.singles.clear();
    std::map<int32_t, RecordStream> streams;
    for (int det = 0; det < sh.n_detectors; ++det) {
        streams[det];
        result.summary.singles[det] = 0;
    }
    for (const auto& task : results) {
        for (int det = 0; det < sh.n_detectors; ++det) {
            auto& dst = streams[det];
            const auto& src = task.streams[static_cast<size_t>(det)];
            dst.insert(dst.end(), src.begin(), src.end());
            result.summary.singles[det] += task.singles[static_cast<size_t>(det)];
        }
        result.summary.routed += task.routed;
        result.summary.leaked += task.leaked;
    }

    // Detector dark counts, uniform over the acquisition.
    const double duration_s = static_cast<double>(periods) * config.period_ps() * 1e-12;
    std::vector<int32_t> detectors;
    for (int det = 0; det < sh.n_detectors; ++det) {
        detectors.push_back(det);
    }
    const int64_t half_window = static_cast<int64_t>(config.coincidence_window_ps / 2.0);
    auto darks =
        inject_noise(config, duration_s, detectors, options.stream_base, false);
    for (auto& [det, stream] : darks) {
        result.summary.singles[det] += static_cast<int64_t>(stream.size());
        if (!options.keep_streams) {
            continue;
        }
        auto& dst = streams[det];
        for (const auto& rec : stream) {
            if (options.central_filter_only) {
                const auto cls = classify_tag(config, rec.time_tag_ps, half_window);
                if (!cls || cls->second != 1 || cls->first != det / 2 + 1) {
                    continue;
                }
            }
            dst.push_back(rec);
        }
    }

    for (auto& [det, stream] : streams) {
        std::sort(stream.begin(), stream.end(),
                  [](const DetectionRecord& a, const DetectionRecord& b) {
                      return a.time_tag_ps < b.time_tag_ps;
                  });
    }
    if (options.keep_streams) {
        result.streams = std::move(streams);
    }
    return result;
}

int64_t cross_slot_coincidences(const ExperimentConfig& config,
                                const std::map<int32_t, RecordStream>& streams) {
    const int64_t window = static_cast<int64_t>(config.coincidence_window_ps);
    int64_t total = 0;
    for (int a = 1; a <= config.n_slots; ++a) {
        for (int b = 1; b <= config.n_slots; ++b) {
            if (a == b) {
                continue;
            }
            const auto sig = streams.find(signal_detector(a));
            const auto idl = streams.find(idler_detector(b));
            if (sig == streams.end() || idl == streams.end()) {
                continue;
            }
            total += count_matches(sig->second, idl->second, window, 0);
        }
    }
    return total;
}

FringeResult run_fringe_experiment(const ExperimentConfig& config, const SweepSpec& sweep,
                                   int workers) {
    config.validate();
    if (sweep.points < 1) {
        throw ConfigError("fringe sweep needs at least one point");
    }
    const auto values = sweep.values();
    const int64_t periods = config.pulses_for_duration(config.duration_s);
    if (periods < 1) {
        throw ConfigError("fringe run duration is too short for one pulse");
    }

    FringeResult result;
    const int64_t window = static_cast<int64_t>(config.coincidence_window_ps);
    const int64_t offset = config.accidental_offset_ps();

    for (size_t point = 0; point < values.size(); ++point) {
        ExperimentConfig cfg = config;
        switch (sweep.parameter) {
            case SweepParameter::pump_phase:
                std::fill(cfg.pump_phase_rad.begin(), cfg.pump_phase_rad.end(),
                          values[point]);
                break;
            case SweepParameter::signal_phase:
                cfg.signal_phase_rad = values[point];
                break;
            case SweepParameter::idler_phase:
                cfg.idler_phase_rad = values[point];
                break;
        }
        CountingOptions opts;
        opts.periods = periods;
        opts.stream_base = static_cast<uint64_t>(point + 1) << kPointStreamShift;
        opts.central_filter_only = true;
        opts.keep_streams = true;
        opts.workers = workers;
        CountingResult counting = run_counting(cfg, opts);

        for (int slot = 1; slot <= config.n_slots; ++slot) {
            const auto& sig = counting.streams[signal_detector(slot)];
            const auto& idl = counting.streams[idler_detector(slot)];
            const CoincidenceResult cc = coincidence_count(sig, idl, window, offset);
            FringeCell cell;
            cell.phase_rad = values[point];
            cell.slot = slot;
            cell.coincidences = cc.coincidences;
            cell.accidentals = cc.accidentals;
            cell.duration_s = config.duration_s;
            result.totals.coincidences += cc.coincidences;
            result.totals.accidentals += cc.accidentals;
            result.cells.push_back(cell);
        }
        for (const auto& [det, count] : counting.summary.singles) {
            result.totals.singles[det] += count;
        }
        result.totals.routed += counting.summary.routed;
        result.totals.leaked += counting.summary.leaked;
    }
    return result;
}

namespace {

struct HomScan {
    double mu;
    PairStatistics stats;
    int max_pairs;
    double eta_sig_a, eta_sig_b;
    double eta_idl_a, eta_idl_b;
    double lam_herald_a, lam_herald_b;  // detected noise at herald detectors
    double lam_noise_idl_a, lam_noise_idl_b;  // detected noise idlers at the coupler
    double p_dark;
    double coh_sigma;
    double pair_jitter;
    double delay_ps;
    int mode;  // 0 open, 1 block arm A, 2 block arm B
    // components: nA, nB, heraldNoiseA, heraldNoiseB, idlNoiseA, idlNoiseB,
    // dark1, dark2, dark3, dark4
    std::array<double, 10> empties{};
    std::array<double, 10> suffix{};
    double p_any = 0.0;
};

HomScan build_hom_scan(const ExperimentConfig& config, double delay_ps, int mode) {
    if (!config.hom) {
        throw ConfigError("hom experiment needs a hom stanza");
    }
    HomScan h;
    h.mu = config.mu;
    h.stats = config.pair_statistics;
    h.max_pairs = config.max_pairs_per_pulse;
    const double eta_a = config.transmittance_for_slot(config.hom->slot_a);
    const double eta_b = config.transmittance_for_slot(config.hom->slot_b);
    h.eta_sig_a = eta_a;
    h.eta_sig_b = eta_b;
    h.eta_idl_a = eta_a;
    h.eta_idl_b = eta_b;
    const double raman = config.raman_rate_for_pair(config.channel_pair);
    h.lam_herald_a = raman * eta_a;
    h.lam_herald_b = raman * eta_b;
    h.lam_noise_idl_a = raman * eta_a;
    h.lam_noise_idl_b = raman * eta_b;
    h.p_dark = config.dark_rate_hz * config.coincidence_window_ps * 1e-12;
    h.coh_sigma = config.coherence_sigma_ps;
    h.pair_jitter = config.pair_jitter_sigma_ps;
    h.delay_ps = delay_ps;
    h.mode = mode;

    const double p0 = 1.0 - oracle::pair_probability(h.mu, h.stats);
    h.empties = {p0,
                 p0,
                 std::exp(-h.lam_herald_a),
                 std::exp(-h.lam_herald_b),
                 std::exp(-h.lam_noise_idl_a),
                 std::exp(-h.lam_noise_idl_b),
                 1.0 - h.p_dark,
                 1.0 - h.p_dark,
                 1.0 - h.p_dark,
                 1.0 - h.p_dark};
    double prod = 1.0;
    for (int i = 9; i >= 0; --i) {
        prod *= h.empties[static_cast<size_t>(i)];
        h.suffix[static_cast<size_t>(i)] = 1.0 - prod;
    }
    h.p_any = h.suffix[0];
    return h;
}

int sample_pairs_at_least_one(double mu, PairStatistics stats, int max_pairs,
                              RngStream& st) {
    int n;
    if (stats == PairStatistics::thermal) {
        n = 1 + st.thermal(mu);  // geometric memorylessness
    } else {
        n = st.poisson_at_least_one(mu);
    }
    return max_pairs > 0 ? std::min(n, max_pairs) : n;
}

// One heralded trial; returns true on a fourfold.
bool hom_trial(const HomScan& h, RngStream& st, uint32_t mask) {
    const int n_a = (mask & 1u) ? sample_pairs_at_least_one(h.mu, h.stats, h.max_pairs, st) : 0;
    const int n_b = (mask & 2u) ? sample_pairs_at_least_one(h.mu, h.stats, h.max_pairs, st) : 0;

    const bool sig_a_click = n_a > 0 && st.binomial(n_a, h.eta_sig_a) > 0;
    const bool sig_b_click = n_b > 0 && st.binomial(n_b, h.eta_sig_b) > 0;
    const bool herald_a = sig_a_click || (mask & 4u) || (mask & 64u);
    const bool herald_b = sig_b_click || (mask & 8u) || (mask & 128u);
    if (!(herald_a && herald_b)) {
        return false;
    }

    int k_a = 0, k_b = 0;
    if (h.mode != 1 && n_a > 0) {
        k_a = st.binomial(n_a, h.eta_idl_a);
    }
    if (h.mode != 2 && n_b > 0) {
        k_b = st.binomial(n_b, h.eta_idl_b);
    }
    int noise_a = (mask & 16u) && h.mode != 1 ? st.poisson_at_least_one(h.lam_noise_idl_a) : 0;
    int noise_b = (mask & 32u) && h.mode != 2 ? st.poisson_at_least_one(h.lam_noise_idl_b) : 0;

    bool port1 = (mask & 256u) != 0;  // darks at the coupler detectors
    bool port2 = (mask & 512u) != 0;

    int extras = noise_a + noise_b;
    if (k_a >= 1 && k_b >= 1) {
        // First idler from each source interferes; the jittered creation
        // times set the effective mode overlap of this trial.
        const double dt = h.delay_ps + (st.gaussian() - st.gaussian()) * h.pair_jitter;
        const double overlap = quantum::temporal_overlap(
            dt, quantum::TemporalMode{0.0, h.coh_sigma});
        if (st.uniform() < quantum::hom_coincidence_probability(overlap, 0.0)) {
            port1 = true;
            port2 = true;
        } else {
            (st.uniform() < 0.5 ? port1 : port2) = true;
        }
        extras += (k_a - 1) + (k_b - 1);
    } else {
        extras += k_a + k_b;
    }
    for (int e = 0; e < extras && !(port1 && port2); ++e) {
        (st.uniform() < 0.5 ? port1 : port2) = true;
    }
    return herald_a && herald_b && port1 && port2;
}

}  // namespace

std::vector<HomPoint> run_hom_experiment(const ExperimentConfig& config,
                                         std::span<const double> delays, int workers) {
    config.validate();
    if (!config.hom) {
        throw ConfigError("hom experiment needs a hom stanza");
    }
    const int64_t periods = config.pulses_for_duration(config.duration_s);
    if (periods < 1) {
        throw ConfigError("hom run duration is too short for one pulse");
    }

    std::vector<HomPoint> points(delays.size());
    for (size_t d = 0; d < delays.size(); ++d) {
        points[d].delay_ps = delays[d];
        for (int mode = 0; mode < 3; ++mode) {
            const HomScan scan = build_hom_scan(config, delays[d], mode);
            const int64_t n_chunks = (periods + kChunk - 1) / kChunk;
            std::vector<int64_t> counts(static_cast<size_t>(n_chunks), 0);
            const uint64_t base = (static_cast<uint64_t>(d + 1) << kPointStreamShift);
            parallel_tasks(n_chunks, workers, [&](int64_t chunk) {
                const int64_t begin = chunk * kChunk;
                const int64_t end = std::min(begin + kChunk, periods);
                int64_t fourfolds = 0;
                scan_range(
                    config.rng_seed, begin, end, scan.p_any,
                    [&](int64_t k) {
                        return base | (static_cast<uint64_t>(k) * 4 +
                                       static_cast<uint64_t>(mode));
                    },
                    [&](int64_t, RngStream& st) {
                        const uint32_t mask =
                            sample_union_mask(scan.empties, scan.suffix, st);
                        if (hom_trial(scan, st, mask)) {
                            ++fourfolds;
                        }
                    });
                counts[static_cast<size_t>(chunk)] = fourfolds;
            });
            int64_t total = 0;
            for (const int64_t c : counts) {
                total += c;
            }
            if (mode == 0) {
                points[d].fourfold = total;
            } else {
                points[d].dark_fourfold += total;
            }
        }
    }
    return points;
}

oracle::OracleParams oracle_params_for(const ExperimentConfig& config, int slot) {
    oracle::OracleParams p;
    p.mu = config.mu;
    p.statistics = config.pair_statistics;
    p.eta_signal = config.transmittance_for_slot(slot);
    p.eta_idler = p.eta_signal;
    p.raman_rate_signal = config.raman_rate_for_pair(config.channel_pair);
    p.raman_rate_idler = p.raman_rate_signal;
    p.dark_rate_hz = config.dark_rate_hz;
    p.coincidence_window_ps = config.coincidence_window_ps;
    p.pulse_period_ps = config.period_ps();
    p.v_cap = config.v_cap;
    p.coherence_sigma_ps = config.coherence_sigma_ps;
    p.pair_jitter_sigma_ps = config.pair_jitter_sigma_ps;
    return p;
}

std::vector<CarPoint> run_car_scan(const ExperimentConfig& config, int workers) {
    config.validate();
    if (!config.scan) {
        throw ConfigError("car scan needs a scan stanza");
    }
    const int64_t periods = config.pulses_for_duration(config.duration_s);
    if (periods < 1) {
        throw ConfigError("car scan duration is too short for one pulse");
    }

    std::vector<std::pair<double, ExperimentConfig>> runs;
    if (config.scan->type == ScanType::mu) {
        const double log_lo = std::log(config.scan->mu_start);
        const double log_hi = std::log(config.scan->mu_stop);
        for (int i = 0; i < config.scan->points; ++i) {
            const double f = config.scan->points == 1
                                 ? 0.0
                                 : static_cast<double>(i) / (config.scan->points - 1);
            ExperimentConfig cfg = config;
            cfg.mu = std::exp(log_lo + (log_hi - log_lo) * f);
            runs.emplace_back(cfg.mu, std::move(cfg));
        }
    } else {
        for (int pair = 1; pair <= config.scan->points; ++pair) {
            ExperimentConfig cfg = config;
            cfg.channel_pair = pair;
            runs.emplace_back(static_cast<double>(pair), std::move(cfg));
        }
    }

    std::vector<CarPoint> points;
    const int64_t window = static_cast<int64_t>(config.coincidence_window_ps);
    const int64_t offset = config.accidental_offset_ps();
    for (size_t i = 0; i < runs.size(); ++i) {
        const ExperimentConfig& cfg = runs[i].second;
        CountingOptions opts;
        opts.periods = periods;
        opts.stream_base = static_cast<uint64_t>(i + 1) << kPointStreamShift;
        opts.workers = workers;
        CountingResult counting = run_counting(cfg, opts);
        const auto& sig = counting.streams[signal_detector(1)];
        const auto& idl = counting.streams[idler_detector(1)];
        const CoincidenceResult cc = coincidence_count(sig, idl, window, offset);

        CarPoint point;
        point.sweep_value = runs[i].first;
        point.coincidences = cc.coincidences;
        point.accidentals = cc.accidentals;
        point.car = cc.accidentals > 0
                        ? static_cast<double>(cc.coincidences) /
                              static_cast<double>(cc.accidentals)
                        : 0.0;
        point.car_oracle = oracle::analytic_car(oracle_params_for(cfg, 1));
        points.push_back(point);
    }
    return points;
}

}  // namespace entmux::sim
