#include "entmux/sim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace entmux::sim {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& value, const std::string& key) {
    if (value == "inf" || value == "+inf") {
        return std::numeric_limits<double>::infinity();
    }
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for `" + key + "`: " + value);
    }
}

int64_t parse_int(const std::string& value, const std::string& key) {
    try {
        size_t pos = 0;
        const int64_t v = std::stoll(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for `" + key + "`: " + value);
    }
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "on" || value == "1") {
        return true;
    }
    if (value == "false" || value == "off" || value == "0") {
        return false;
    }
    throw ConfigError("bad boolean value for `" + key + "`: " + value);
}

analysis::LossLedger parse_ledger(const std::string& value, const std::string& key) {
    analysis::LossLedger ledger;
    std::istringstream in(value);
    std::string item;
    while (in >> item) {
        const auto colon = item.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
            throw ConfigError("bad ledger entry for `" + key + "`: " + item +
                              " (expected name:dB)");
        }
        ledger.entries.emplace_back(item.substr(0, colon),
                                    parse_double(item.substr(colon + 1), key));
    }
    return ledger;
}

}  // namespace

std::vector<double> SweepSpec::values() const {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(std::max(points, 0)));
    if (points == 1) {
        out.push_back(start_rad);
        return out;
    }
    for (int i = 0; i < points; ++i) {
        out.push_back(start_rad + (stop_rad - start_rad) * i / (points - 1));
    }
    return out;
}

std::vector<double> HomSpec::delays() const {
    std::vector<double> out;
    for (int i = 0; i < points; ++i) {
        out.push_back(points == 1 ? delay_start_ps
                                  : delay_start_ps +
                                        (delay_stop_ps - delay_start_ps) * i / (points - 1));
    }
    return out;
}

int64_t ExperimentConfig::accidental_offset_ps() const {
    return static_cast<int64_t>(std::llround(period_ps()));
}

int64_t ExperimentConfig::pulses_for_duration(double seconds) const {
    return static_cast<int64_t>(seconds * rep_rate_mhz * 1e6);
}

const analysis::LossLedger* ExperimentConfig::ledger_for_slot(int slot) const {
    const auto it = loss_paths.find("t" + std::to_string(slot));
    return it == loss_paths.end() ? nullptr : &it->second;
}

double ExperimentConfig::transmittance_for_slot(int slot) const {
    const analysis::LossLedger* ledger = ledger_for_slot(slot);
    return ledger ? analysis::ledger_total(*ledger).transmittance : 1.0;
}

double ExperimentConfig::raman_rate_for_pair(int pair_index) const {
    const auto it = raman_rate_per_pair.find(pair_index);
    return it == raman_rate_per_pair.end() ? raman_singles_rate : it->second;
}

void ExperimentConfig::validate() const {
    if (!(rep_rate_mhz > 0.0)) {
        throw ConfigError("rep_rate_mhz must be positive");
    }
    if (n_slots < 1 || n_slots > 64) {
        throw ConfigError("n_slots must lie in [1, 64]");
    }
    if (!(slot_spacing_ns > 0.0)) {
        throw ConfigError("slot_spacing_ns must be positive");
    }
    const double period_ns = 1.0e3 / rep_rate_mhz;
    if (!(n_slots * slot_spacing_ns < period_ns)) {
        throw ConfigError("time slots overflow the pulse period: need n_slots * "
                          "slot_spacing_ns < period");
    }
    if (!(umi_imbalance_ns > coincidence_window_ps / 1000.0)) {
        throw ConfigError("umi_imbalance_ns must exceed the coincidence window so "
                          "satellite peaks resolve");
    }
    if (analyzers_present && !(2.0 * umi_imbalance_ns < slot_spacing_ns)) {
        throw ConfigError("arrival slots spill into the next time slot: need "
                          "2 * umi_imbalance_ns < slot_spacing_ns");
    }
    if (!(mu >= 0.0)) {
        throw ConfigError("mu must be non-negative");
    }
    if (!(raman_singles_rate >= 0.0) || !(dark_rate_hz >= 0.0)) {
        throw ConfigError("noise rates must be non-negative");
    }
    for (const auto& [pair, rate] : raman_rate_per_pair) {
        if (pair < 1 || !(rate >= 0.0)) {
            throw ConfigError("bad per-pair noise rate");
        }
    }
    if (!(detector_jitter_sigma_ps >= 0.0)) {
        throw ConfigError("detector jitter must be non-negative");
    }
    if (!(coincidence_window_ps > 0.0)) {
        throw ConfigError("coincidence window must be positive");
    }
    if (!(v_cap >= 0.0 && v_cap <= 1.0)) {
        throw ConfigError("v_cap must lie in [0, 1]");
    }
    if (!(switch_extinction_db >= 0.0)) {  // +inf allowed
        throw ConfigError("switch extinction must be non-negative");
    }
    if (!(coherence_sigma_ps > 0.0) || !(pair_jitter_sigma_ps >= 0.0)) {
        throw ConfigError("temporal mode widths out of range");
    }
    if (max_pairs_per_pulse < 0) {
        throw ConfigError("max_pairs_per_pulse must be >= 0");
    }
    if (!(duration_s >= 0.0)) {
        throw ConfigError("duration_s must be non-negative");
    }
    if (static_cast<int>(pump_phase_rad.size()) != n_slots) {
        throw ConfigError("need one pump phase per time slot");
    }
    if (channel_pair < 1) {
        throw ConfigError("channel_pair must be >= 1");
    }
    for (const auto& [path, ledger] : loss_paths) {
        analysis::ledger_total(ledger);  // throws on negative entries
    }
    if (sweep && sweep->points < 1) {
        throw ConfigError("sweep.points must be >= 1");
    }
    if (hom) {
        if (hom->slot_a < 1 || hom->slot_a > n_slots || hom->slot_b < 1 ||
            hom->slot_b > n_slots || hom->slot_a == hom->slot_b) {
            throw ConfigError("hom slots must be two distinct slots in [1, n_slots]");
        }
        if (hom->points < 1) {
            throw ConfigError("hom.points must be >= 1");
        }
    }
    if (scan && scan->points < 1) {
        throw ConfigError("scan.points must be >= 1");
    }
    if (scan && scan->type == ScanType::mu &&
        !(scan->mu_start > 0.0 && scan->mu_stop > scan->mu_start)) {
        throw ConfigError("mu scan needs 0 < mu_start < mu_stop");
    }
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    analysis::LossLedger once;
    once.entries = {{"waveguide", 5.00}, {"dwdm", 2.00}, {"switch", 2.5},
                    {"umi", 4.7},        {"detector", 1.5}};
    analysis::LossLedger twice = once;
    twice.entries.insert(twice.entries.begin() + 3, {"switch2", 2.5});
    c.loss_paths["t1"] = once;
    c.loss_paths["t2"] = twice;
    c.loss_paths["t3"] = twice;
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    return parse_config(in, path);
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
    // Start from a bare configuration: a file describes its own apparatus,
    // including its loss ledgers. ExperimentConfig::defaults() is the
    // reference setup used when no file is given at all.
    ExperimentConfig c;
    std::map<int, double> pump_phases;

    using Handler = std::function<void(const std::string& key, const std::string& value)>;
    const std::map<std::string, Handler> handlers = {
        {"rep_rate_mhz", [&](const auto& k, const auto& v) { c.rep_rate_mhz = parse_double(v, k); }},
        {"slot_spacing_ns", [&](const auto& k, const auto& v) { c.slot_spacing_ns = parse_double(v, k); }},
        {"n_slots", [&](const auto& k, const auto& v) { c.n_slots = static_cast<int>(parse_int(v, k)); }},
        {"umi_imbalance_ns", [&](const auto& k, const auto& v) { c.umi_imbalance_ns = parse_double(v, k); }},
        {"signal_phase", [&](const auto& k, const auto& v) { c.signal_phase_rad = parse_double(v, k); }},
        {"idler_phase", [&](const auto& k, const auto& v) { c.idler_phase_rad = parse_double(v, k); }},
        {"v_cap", [&](const auto& k, const auto& v) { c.v_cap = parse_double(v, k); }},
        {"mu", [&](const auto& k, const auto& v) { c.mu = parse_double(v, k); }},
        {"pair_statistics",
         [&](const auto& k, const auto& v) {
             if (v == "thermal") {
                 c.pair_statistics = PairStatistics::thermal;
             } else if (v == "poisson") {
                 c.pair_statistics = PairStatistics::poisson;
             } else {
                 throw ConfigError("bad value for `" + k + "`: " + v);
             }
         }},
        {"max_pairs_per_pulse",
         [&](const auto& k, const auto& v) { c.max_pairs_per_pulse = static_cast<int>(parse_int(v, k)); }},
        {"raman_singles_rate",
         [&](const auto& k, const auto& v) { c.raman_singles_rate = parse_double(v, k); }},
        {"dark_rate_hz", [&](const auto& k, const auto& v) { c.dark_rate_hz = parse_double(v, k); }},
        {"detector_jitter_sigma_ps",
         [&](const auto& k, const auto& v) { c.detector_jitter_sigma_ps = parse_double(v, k); }},
        {"coincidence_window_ps",
         [&](const auto& k, const auto& v) { c.coincidence_window_ps = parse_double(v, k); }},
        {"switch_extinction_db",
         [&](const auto& k, const auto& v) { c.switch_extinction_db = parse_double(v, k); }},
        {"analyzers_present",
         [&](const auto& k, const auto& v) { c.analyzers_present = parse_bool(v, k); }},
        {"coherence_sigma_ps",
         [&](const auto& k, const auto& v) { c.coherence_sigma_ps = parse_double(v, k); }},
        {"pair_jitter_sigma_ps",
         [&](const auto& k, const auto& v) { c.pair_jitter_sigma_ps = parse_double(v, k); }},
        {"duration_s", [&](const auto& k, const auto& v) { c.duration_s = parse_double(v, k); }},
        {"rng_seed",
         [&](const auto& k, const auto& v) { c.rng_seed = static_cast<uint64_t>(parse_int(v, k)); }},
        {"pump_channel",
         [&](const auto& k, const auto& v) { c.pump_channel = static_cast<int>(parse_int(v, k)); }},
        {"channel_pair",
         [&](const auto& k, const auto& v) { c.channel_pair = static_cast<int>(parse_int(v, k)); }},
        {"grid_file", [&](const auto&, const auto& v) { c.grid_file = v; }},
        {"sweep.parameter",
         [&](const auto& k, const auto& v) {
             if (!c.sweep) c.sweep.emplace();
             if (v == "pump_phase") {
                 c.sweep->parameter = SweepParameter::pump_phase;
             } else if (v == "signal_phase") {
                 c.sweep->parameter = SweepParameter::signal_phase;
             } else if (v == "idler_phase") {
                 c.sweep->parameter = SweepParameter::idler_phase;
             } else {
                 throw ConfigError("bad value for `" + k + "`: " + v);
             }
         }},
        {"sweep.start_rad",
         [&](const auto& k, const auto& v) {
             if (!c.sweep) c.sweep.emplace();
             c.sweep->start_rad = parse_double(v, k);
         }},
        {"sweep.stop_rad",
         [&](const auto& k, const auto& v) {
             if (!c.sweep) c.sweep.emplace();
             c.sweep->stop_rad = parse_double(v, k);
         }},
        {"sweep.points",
         [&](const auto& k, const auto& v) {
             if (!c.sweep) c.sweep.emplace();
             c.sweep->points = static_cast<int>(parse_int(v, k));
         }},
        {"hom.slot_a",
         [&](const auto& k, const auto& v) {
             if (!c.hom) c.hom.emplace();
             c.hom->slot_a = static_cast<int>(parse_int(v, k));
         }},
        {"hom.slot_b",
         [&](const auto& k, const auto& v) {
             if (!c.hom) c.hom.emplace();
             c.hom->slot_b = static_cast<int>(parse_int(v, k));
         }},
        {"hom.delay_start_ps",
         [&](const auto& k, const auto& v) {
             if (!c.hom) c.hom.emplace();
             c.hom->delay_start_ps = parse_double(v, k);
         }},
        {"hom.delay_stop_ps",
         [&](const auto& k, const auto& v) {
             if (!c.hom) c.hom.emplace();
             c.hom->delay_stop_ps = parse_double(v, k);
         }},
        {"hom.points",
         [&](const auto& k, const auto& v) {
             if (!c.hom) c.hom.emplace();
             c.hom->points = static_cast<int>(parse_int(v, k));
         }},
        {"hom.baseline_delay_ps",
         [&](const auto& k, const auto& v) {
             if (!c.hom) c.hom.emplace();
             c.hom->extra_baseline_delay_ps = parse_double(v, k);
         }},
        {"scan.type",
         [&](const auto& k, const auto& v) {
             if (!c.scan) c.scan.emplace();
             if (v == "mu") {
                 c.scan->type = ScanType::mu;
             } else if (v == "channel") {
                 c.scan->type = ScanType::channel;
             } else {
                 throw ConfigError("bad value for `" + k + "`: " + v);
             }
         }},
        {"scan.mu_start",
         [&](const auto& k, const auto& v) {
             if (!c.scan) c.scan.emplace();
             c.scan->mu_start = parse_double(v, k);
         }},
        {"scan.mu_stop",
         [&](const auto& k, const auto& v) {
             if (!c.scan) c.scan.emplace();
             c.scan->mu_stop = parse_double(v, k);
         }},
        {"scan.points",
         [&](const auto& k, const auto& v) {
             if (!c.scan) c.scan.emplace();
             c.scan->points = static_cast<int>(parse_int(v, k));
         }},
    };

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected `key = value`");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected `key = value`");
        }

        try {
            if (const auto it = handlers.find(key); it != handlers.end()) {
                it->second(key, value);
            } else if (key.rfind("pump_phase_t", 0) == 0) {
                const int slot = static_cast<int>(parse_int(key.substr(12), key));
                if (slot < 1) {
                    throw ConfigError("bad pump phase slot in `" + key + "`");
                }
                pump_phases[slot] = parse_double(value, key);
            } else if (key.rfind("loss.", 0) == 0) {
                c.loss_paths[key.substr(5)] = parse_ledger(value, key);
            } else if (key.rfind("raman_rate_pair_", 0) == 0) {
                const int pair = static_cast<int>(parse_int(key.substr(16), key));
                c.raman_rate_per_pair[pair] = parse_double(value, key);
            } else {
                throw ConfigError("unknown key `" + key + "`");
            }
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }

    c.pump_phase_rad.assign(static_cast<size_t>(std::max(c.n_slots, 1)), 0.0);
    for (const auto& [slot, phase] : pump_phases) {
        if (slot > c.n_slots) {
            throw ConfigError(origin + ": pump_phase_t" + std::to_string(slot) +
                              " exceeds n_slots");
        }
        c.pump_phase_rad[static_cast<size_t>(slot - 1)] = phase;
    }
    return c;
}

}  // namespace entmux::sim
