// Acceptance suite for the multiplexed entanglement-source simulator.
// Runs every release criterion at its pinned tolerance and prints one
// PASS/FAIL line per criterion. Exits non-zero if any criterion fails.
//
// Usage: acceptance_tests <entmux-binary> <configs-dir>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "entmux/analysis.hpp"
#include "entmux/channel_grid.hpp"
#include "entmux/io/csv.hpp"
#include "entmux/oracle.hpp"
#include "entmux/quantum_core.hpp"
#include "entmux/sim/config.hpp"
#include "entmux/sim/counting.hpp"
#include "entmux/sim/engine.hpp"
#include "entmux/sim/rng.hpp"

namespace fs = std::filesystem;
using namespace entmux;

namespace {

std::string g_entmux;
std::string g_configs;
fs::path g_scratch;
int g_failures = 0;

void criterion(int number, const std::string& name,
               const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %-28s %s  (%.1f s)%s%s\n", number, name.c_str(),
                ok ? "PASS" : "FAIL", seconds, detail.empty() ? "" : "  -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) {
        ++g_failures;
    }
}

std::string shell_capture(const std::string& cmd, int* exit_code) {
    std::string out;
    FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
    if (pipe == nullptr) {
        if (exit_code != nullptr) {
            *exit_code = -1;
        }
        return out;
    }
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) {
        out.append(buf, n);
    }
    const int status = pclose(pipe);
    if (exit_code != nullptr) {
        *exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

sim::ExperimentConfig load_config_file(const std::string& name) {
    return sim::load_config(g_configs + "/" + name);
}

struct SlotVisibility {
    double raw;
    double subtracted;
    double period;
};

std::vector<SlotVisibility> fringe_visibilities(const sim::ExperimentConfig& config,
                                                const sim::FringeResult& result) {
    std::vector<SlotVisibility> out;
    for (int slot = 1; slot <= config.n_slots; ++slot) {
        std::vector<std::pair<double, double>> raw_pts, sub_pts;
        for (const auto& cell : result.cells) {
            if (cell.slot != slot) {
                continue;
            }
            raw_pts.emplace_back(cell.phase_rad, static_cast<double>(cell.coincidences));
            sub_pts.emplace_back(cell.phase_rad,
                                 std::max(0.0, static_cast<double>(cell.coincidences -
                                                                   cell.accidentals)));
        }
        const auto fit = analysis::fit_fringe(raw_pts);
        const double span = raw_pts.back().first - raw_pts.front().first;
        const auto fit_sub =
            analysis::fit_fringe(sub_pts, std::min(fit.period_rad, span));
        out.push_back(SlotVisibility{fit.visibility, fit_sub.visibility, fit.period_rad});
    }
    return out;
}

// --- criteria ------------------------------------------------------------

bool grid_fidelity(std::string& detail) {
    int code = 0;
    const std::string got = shell_capture(g_entmux + " budget --channels", &code);
    if (code != 0) {
        detail = "budget --channels exited " + std::to_string(code);
        return false;
    }
    // Channel plan rows transcribed independently of the library table.
    const std::vector<std::string> expected = {
        "Signal 14 - Idler 14  C19 - C49  1562.23 - 1538.19",
        "Signal 13 - Idler 13  C20 - C48  1561.42 - 1538.98",
        "Signal 12 - Idler 12  C21 - C47  1560.61 - 1539.77",
        "Signal 11 - Idler 11  C22 - C46  1559.79 - 1540.56",
        "Signal 10 - Idler 10  C23 - C45  1558.98 - 1541.35",
        "Signal 9 - Idler 9  C24 - C44  1558.17 - 1542.14",
        "Signal 8 - Idler 8  C25 - C43  1557.36 - 1542.94",
        "Signal 7 - Idler 7  C26 - C42  1556.56 - 1543.73",
        "Signal 6 - Idler 6  C27 - C41  1555.75 - 1544.53",
        "Signal 5 - Idler 5  C28 - C40  1554.94 - 1545.32",
        "Signal 4 - Idler 4  C29 - C39  1554.13 - 1546.12",
        "Signal 3 - Idler 3  C30 - C38  1553.33 - 1546.92",
        "Signal 2 - Idler 2  C31 - C37  1552.52 - 1547.72",
        "Signal 1 - Idler 1  C32 - C36  1551.72 - 1548.52",
        "Pump  C34  1550.12",
    };
    std::vector<std::string> lines;
    std::istringstream in(got);
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    if (lines != expected) {
        detail = "channel plan differs from the printed table";
        return false;
    }
    const auto& grid = ChannelGrid::c_band_100ghz();
    for (int k = 1; k <= 14; ++k) {
        if (!energy_conservation_check(grid.pair_for_index(k, {34}), {34})) {
            detail = "energy conservation failed at pair " + std::to_string(k);
            return false;
        }
    }
    detail = "15 rows exact, 14 pairs conserve energy";
    return true;
}

bool loss_ledger(std::string& detail) {
    const auto config = sim::ExperimentConfig::defaults();
    const double t1 = analysis::ledger_total(*config.ledger_for_slot(1)).total_db;
    const double t2 = analysis::ledger_total(*config.ledger_for_slot(2)).total_db;
    const double t3 = analysis::ledger_total(*config.ledger_for_slot(3)).total_db;
    if (std::abs(t1 - 15.7) > 1e-9 || std::abs(t2 - 18.2) > 1e-9 ||
        std::abs(t3 - 18.2) > 1e-9) {
        detail = "totals are not 15.7 / 18.2 dB";
        return false;
    }
    int code = 0;
    const std::string got = shell_capture(g_entmux + " budget", &code);
    if (code != 0 || got.find("T1  15.7 dB") == std::string::npos ||
        got.find("T2  18.2 dB") == std::string::npos ||
        got.find("T3  18.2 dB") == std::string::npos) {
        detail = "budget output does not print the totals";
        return false;
    }
    detail = "T1 15.7 dB, T2/T3 18.2 dB";
    return true;
}

struct IdealSweepResult {
    sim::ExperimentConfig config;
    sim::FringeResult run;
    double fitted_period = 0.0;
    double fitted_visibility = 0.0;
};

IdealSweepResult run_ideal_sweep(sim::SweepParameter parameter) {
    IdealSweepResult out;
    out.config = load_config_file("fringe_ideal.conf");
    out.config.sweep->parameter = parameter;
    out.run = sim::run_fringe_experiment(out.config, *out.config.sweep, 0);
    const auto fits = fringe_visibilities(out.config, out.run);
    out.fitted_period = fits[0].period;
    out.fitted_visibility = fits[0].raw;
    return out;
}

IdealSweepResult g_pump_sweep, g_signal_sweep;  // shared by criteria 3 and 4

bool fringe_law(std::string& detail) {
    g_pump_sweep = run_ideal_sweep(sim::SweepParameter::pump_phase);
    g_signal_sweep = run_ideal_sweep(sim::SweepParameter::signal_phase);
    const double pi = std::numbers::pi;

    char buf[160];
    std::snprintf(buf, sizeof(buf), "pump period %.4f (pi %.4f), V %.4f; signal period %.4f (2pi %.4f)",
                  g_pump_sweep.fitted_period, pi, g_pump_sweep.fitted_visibility,
                  g_signal_sweep.fitted_period, 2 * pi);
    detail = buf;

    if (std::abs(g_pump_sweep.fitted_period - pi) > 0.01 * pi) {
        return false;
    }
    if (g_pump_sweep.fitted_visibility < 0.999) {
        return false;
    }
    if (std::abs(g_signal_sweep.fitted_period - 2 * pi) > 0.02 * pi) {
        return false;
    }
    if (g_signal_sweep.fitted_visibility < 0.999) {
        return false;
    }
    return true;
}

bool oracle_equivalence(std::string& detail) {
    // Monte Carlo counts against the analytic rate, 3 sigma Poisson per point.
    for (const IdealSweepResult* sweep : {&g_pump_sweep, &g_signal_sweep}) {
        if (sweep->run.cells.empty()) {
            detail = "criterion 3 sweeps unavailable";
            return false;
        }
        const double p1 =
            oracle::pair_probability(sweep->config.mu, sweep->config.pair_statistics);
        const double periods = static_cast<double>(
            sweep->config.pulses_for_duration(sweep->config.duration_s));
        const bool pump = sweep->config.sweep->parameter == sim::SweepParameter::pump_phase;
        for (const auto& cell : sweep->run.cells) {
            const double rate = pump
                                    ? oracle::analytic_fringe(cell.phase_rad, 0, 0, 1)
                                    : oracle::analytic_fringe(0, cell.phase_rad, 0, 1);
            const double expect = periods * p1 * rate;
            const double obs = static_cast<double>(cell.coincidences);
            if (expect == 0.0) {
                if (obs != 0.0) {
                    detail = "non-zero counts at an exact interference null";
                    return false;
                }
            } else if (std::abs(obs - expect) > 3.0 * std::sqrt(expect)) {
                char buf[120];
                std::snprintf(buf, sizeof(buf), "phase %.3f: obs %.0f expect %.1f",
                              cell.phase_rad, obs, expect);
                detail = buf;
                return false;
            }
        }
    }
    // Path enumeration against the analyzer transform, 1e-12 over 1000 triples.
    sim::RngStream rng(314159, 0, sim::Stage::generic);
    for (int trial = 0; trial < 1000; ++trial) {
        const double phi_p = rng.uniform() * 2 * std::numbers::pi;
        const double phi_s = rng.uniform() * 2 * std::numbers::pi;
        const double phi_i = rng.uniform() * 2 * std::numbers::pi;
        const auto table = oracle::brute_force_state_propagation(phi_p, phi_s, phi_i);
        const auto dist = quantum::analyzer_transform(
            quantum::pair_state_from_pump(quantum::pump_after_umi(phi_p)), phi_s, phi_i,
            1.0);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double got = dist.probability(static_cast<quantum::ArrivalSlot>(i),
                                                    static_cast<quantum::ArrivalSlot>(j));
                if (std::abs(got - table[i][j]) > 1e-12) {
                    detail = "path enumeration disagrees with the transform";
                    return false;
                }
            }
        }
    }
    detail = "82 sweep points within 3 sigma; 1000 triples to 1e-12";
    return true;
}

std::vector<SlotVisibility> g_nominal_fringe;  // shared by criteria 5 and 6

bool nominal_visibility(std::string& detail) {
    const auto config = load_config_file("fringe_nominal.conf");
    const auto result = sim::run_fringe_experiment(config, *config.sweep, 0);
    g_nominal_fringe = fringe_visibilities(config, result);
    bool ok = true;
    std::string parts;
    for (size_t s = 0; s < g_nominal_fringe.size(); ++s) {
        char buf[80];
        std::snprintf(buf, sizeof(buf), "T%zu raw %.4f sub %.4f; ", s + 1,
                      g_nominal_fringe[s].raw, g_nominal_fringe[s].subtracted);
        parts += buf;
        ok = ok && g_nominal_fringe[s].raw > 0.90 && g_nominal_fringe[s].subtracted > 0.95;
    }
    detail = parts;
    return ok;
}

bool chsh_gate(std::string& detail) {
    if (analysis::chsh_violation(1.0 / std::numbers::sqrt2)) {
        detail = "violation claimed exactly at 1/sqrt(2)";
        return false;
    }
    if (!analysis::chsh_violation(0.708)) {
        detail = "no violation at v = 0.708";
        return false;
    }
    if (g_nominal_fringe.empty()) {
        detail = "criterion 5 visibilities unavailable";
        return false;
    }
    for (const auto& v : g_nominal_fringe) {
        if (!analysis::chsh_violation(v.raw)) {
            detail = "nominal visibility does not violate CHSH";
            return false;
        }
    }
    detail = "boundary exact, all slots violate";
    return true;
}

bool hom_dip(std::string& detail) {
    // Ideal two-source run: net visibility above 0.99 at zero delay.
    const auto ideal = load_config_file("hom_ideal.conf");
    std::vector<double> delays = ideal.hom->delays();
    delays.push_back(ideal.hom->extra_baseline_delay_ps);
    const auto ideal_points = sim::run_hom_experiment(ideal, delays, 0);
    const double ideal_dip = static_cast<double>(ideal_points[0].fourfold);
    const double ideal_base = static_cast<double>(ideal_points[1].fourfold);
    const double ideal_dark = static_cast<double>(ideal_points[0].dark_fourfold);
    const auto ideal_vis = analysis::hom_visibility(
        ideal_dip, ideal_base,
        ideal_dark < ideal_base ? std::optional<double>(ideal_dark) : std::nullopt);

    // Multi-pair epsilon pinned by the CAR = 8 operating point of the
    // single-pass source.
    auto car_params = sim::oracle_params_for(load_config_file("car_scan.conf"), 1);
    double lo = 0.05, hi = 1.0;
    for (int i = 0; i < 100; ++i) {
        car_params.mu = 0.5 * (lo + hi);
        (oracle::analytic_car(car_params) > 8.0 ? lo : hi) = car_params.mu;
    }
    const double mu_car8 = 0.5 * (lo + hi);

    auto nominal = load_config_file("hom_nominal.conf");
    nominal.mu = mu_car8;
    delays = nominal.hom->delays();
    delays.push_back(nominal.hom->extra_baseline_delay_ps);
    const auto points = sim::run_hom_experiment(nominal, delays, 0);
    size_t dip_idx = 0, base_idx = 0;
    for (size_t i = 0; i < points.size(); ++i) {
        if (std::abs(points[i].delay_ps) < std::abs(points[dip_idx].delay_ps)) {
            dip_idx = i;
        }
        if (std::abs(points[i].delay_ps) > std::abs(points[base_idx].delay_ps)) {
            base_idx = i;
        }
    }
    const auto vis = analysis::hom_visibility(
        static_cast<double>(points[dip_idx].fourfold),
        static_cast<double>(points[base_idx].fourfold),
        static_cast<double>(points[dip_idx].dark_fourfold));

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "ideal net %.4f; CAR8 mu %.3f raw %.4f net %.4f", ideal_vis.net,
                  mu_car8, vis.raw, vis.net);
    detail = buf;
    if (ideal_vis.net <= 0.99) {
        return false;
    }
    if (!(vis.raw >= 0.40 && vis.raw <= 0.75)) {
        return false;
    }
    if (!(vis.net > vis.raw)) {
        return false;
    }
    return true;
}

bool counting_statistics(std::string& detail) {
    // Accidental estimator on uncorrelated Poisson streams, 1e6 events each.
    const double rate = 50e3, duration = 20.0, window_ps = 1000.0;
    auto make_stream = [&](uint64_t id, int32_t det) {
        sim::RngStream st(8675309, id, sim::Stage::generic);
        sim::RecordStream out;
        const int n = st.poisson(rate * duration);
        for (int i = 0; i < n; ++i) {
            out.push_back(sim::DetectionRecord{
                det, static_cast<int64_t>(st.uniform() * duration * 1e12),
                sim::PhotonOrigin::dark});
        }
        std::sort(out.begin(), out.end(),
                  [](const sim::DetectionRecord& a, const sim::DetectionRecord& b) {
                      return a.time_tag_ps < b.time_tag_ps;
                  });
        return out;
    };
    const auto a = make_stream(1, 0);
    const auto b = make_stream(2, 1);
    const auto cc = sim::coincidence_count(a, b, static_cast<int64_t>(window_ps), 35753);
    const double expect = oracle::poisson_accidentals(rate, rate, duration, window_ps);
    if (std::abs(static_cast<double>(cc.accidentals) - expect) > 3 * std::sqrt(expect)) {
        detail = "accidental estimator biased on uncorrelated streams";
        return false;
    }
    if (std::abs(static_cast<double>(cc.coincidences - cc.accidentals)) >
        3 * std::sqrt(2 * expect)) {
        detail = "estimator and direct count disagree";
        return false;
    }

    // CAR against the analytic prediction over one decade of mu.
    const auto config = load_config_file("car_scan.conf");
    const auto points = sim::run_car_scan(config, 0);
    double prev = 1e18;
    std::string parts = "cars:";
    for (const auto& p : points) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), " %.1f", p.car);
        parts += buf;
        if (!(p.car < prev)) {
            detail = "CAR is not strictly decreasing in mu";
            return false;
        }
        prev = p.car;
        const double sigma_rel =
            std::sqrt(1.0 / static_cast<double>(std::max<int64_t>(p.coincidences, 1)) +
                      1.0 / static_cast<double>(std::max<int64_t>(p.accidentals, 1)));
        if (std::abs(p.car - p.car_oracle) > 3 * sigma_rel * p.car_oracle) {
            detail = "Monte Carlo CAR misses the analytic value";
            return false;
        }
    }
    detail = "estimator unbiased; " + parts;
    return true;
}

bool determinism(std::string& detail) {
    const fs::path dir_a = g_scratch / "det_a";
    const fs::path dir_b = g_scratch / "det_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    struct Job {
        std::string subcommand;
        std::string config;
        std::string duration;
    };
    const std::vector<Job> jobs = {
        {"fringe", "fringe_nominal.conf", "2"},
        {"hom", "hom_nominal.conf", "0.02"},
        {"car-scan", "car_scan.conf", "0.3"},
    };
    for (const auto& job : jobs) {
        for (const auto& [dir, workers] :
             std::vector<std::pair<fs::path, std::string>>{{dir_a, "1"}, {dir_b, "2"}}) {
            int code = 0;
            shell_capture(g_entmux + " " + job.subcommand + " --config " + g_configs +
                              "/" + job.config + " --seed 17 --workers " + workers +
                              " --duration " + job.duration + " --out " +
                              (dir / job.subcommand).string(),
                          &code);
            if (code != 0) {
                detail = job.subcommand + " exited " + std::to_string(code);
                return false;
            }
        }
        for (const auto& entry : fs::directory_iterator(dir_a / job.subcommand)) {
            if (entry.path().extension() != ".csv") {
                continue;
            }
            const fs::path twin = dir_b / job.subcommand / entry.path().filename();
            if (read_file(entry.path()) != read_file(twin)) {
                detail = "byte mismatch in " + entry.path().filename().string();
                return false;
            }
        }
    }
    detail = "fringe, hom and car-scan CSVs byte-identical across workers";
    return true;
}

bool slot_isolation(std::string& detail) {
    sim::ExperimentConfig config;
    config.pump_phase_rad = {0.4, 1.3, 2.1};
    config.mu = 0.05;
    config.raman_singles_rate = 0.0;
    config.dark_rate_hz = 0.0;
    config.detector_jitter_sigma_ps = 0.0;
    config.switch_extinction_db = std::numeric_limits<double>::infinity();
    config.rng_seed = 23;

    sim::CountingOptions opts;
    opts.periods = 4000000;  // 1.2e7 pulses over three slots
    opts.workers = 0;
    const auto ideal = sim::run_counting(config, opts);
    const int64_t cross = sim::cross_slot_coincidences(config, ideal.streams);
    if (ideal.summary.leaked != 0 || cross != 0) {
        detail = "cross-slot events with ideal switches";
        return false;
    }

    config.switch_extinction_db = 20.0;
    const auto leaky = sim::run_counting(config, opts);
    const double leak_p = std::pow(10.0, -2.0);
    const double routed = static_cast<double>(leaky.summary.routed);
    const double fraction = static_cast<double>(leaky.summary.leaked) / routed;
    const double sigma = std::sqrt(leak_p * (1 - leak_p) / routed);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "ideal cross-slot 0; 20 dB leak %.5f (3 sigma %.5f)",
                  fraction, 3 * sigma);
    detail = buf;
    return std::abs(fraction - leak_p) < 3 * sigma;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance_tests <entmux-binary> <configs-dir>\n");
        return 2;
    }
    g_entmux = argv[1];
    g_configs = argv[2];
    g_scratch = fs::temp_directory_path() / "entmux_acceptance";
    fs::create_directories(g_scratch);

    criterion(1, "grid fidelity", grid_fidelity);
    criterion(2, "loss ledger", loss_ledger);
    criterion(3, "fringe law", fringe_law);
    criterion(4, "oracle equivalence", oracle_equivalence);
    criterion(5, "nominal visibility", nominal_visibility);
    criterion(6, "CHSH gate", chsh_gate);
    criterion(7, "HOM dip", hom_dip);
    criterion(8, "counting statistics", counting_statistics);
    criterion(9, "determinism", determinism);
    criterion(10, "slot isolation", slot_isolation);

    if (g_failures != 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
