// entmux: simulator and analysis toolkit for a time- and
// wavelength-multiplexed time-bin entanglement source.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "entmux/analysis.hpp"
#include "entmux/channel_grid.hpp"
#include "entmux/io/csv.hpp"
#include "entmux/io/svg.hpp"
#include "entmux/oracle.hpp"
#include "entmux/sim/config.hpp"
#include "entmux/sim/engine.hpp"

namespace fs = std::filesystem;
using namespace entmux;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("ENTMUX_LOG");
        if (env == nullptr) {
            return 1;
        }
        const std::string v(env);
        if (v == "error") return 0;
        if (v == "warn") return 1;
        if (v == "info") return 2;
        if (v == "debug") return 3;
        return 1;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 2) {
        std::cerr << "entmux: " << msg << "\n";
    }
}

struct RunManifest {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<uint64_t> seed;
    int workers = 0;  // 0 = available parallelism
    std::optional<double> duration_s;
};

sim::ExperimentConfig load_for_run(const RunManifest& m) {
    sim::ExperimentConfig config = m.config_path.empty()
                                       ? sim::ExperimentConfig::defaults()
                                       : sim::load_config(m.config_path);
    if (m.seed) {
        config.rng_seed = *m.seed;
    }
    if (m.duration_s) {
        config.duration_s = *m.duration_s;
    }
    config.validate();
    return config;
}

ChannelGrid grid_for(const sim::ExperimentConfig& config) {
    return config.grid_file.empty() ? ChannelGrid::c_band_100ghz()
                                    : ChannelGrid::from_file(config.grid_file);
}

std::string channel_label(const sim::ExperimentConfig& config) {
    return "S" + std::to_string(config.channel_pair) + "-I" +
           std::to_string(config.channel_pair);
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw std::runtime_error("output directory is not usable: " + dir);
    }
}

void check_positive_duration(const sim::ExperimentConfig& config) {
    if (!(config.duration_s > 0.0)) {
        throw sim::ConfigError("duration_s must be positive for a run");
    }
}

struct ResultsCsv {
    io::CsvWriter writer{std::vector<std::string>{"metric", "value", "uncertainty"}};
    void add(const std::string& metric, double value, double uncertainty = 0.0) {
        writer.begin_row().field(metric).field(value).field(uncertainty);
    }
    void save(const std::string& path) { writer.save(path); }
};

int cmd_fringe(const RunManifest& m) {
    const sim::ExperimentConfig config = load_for_run(m);
    check_positive_duration(config);
    if (!config.sweep) {
        throw sim::ConfigError("fringe runs need a sweep stanza");
    }
    if (config.sweep->points < 5) {
        throw sim::ConfigError("fringe sweep needs at least 5 points for the fit");
    }
    ensure_out_dir(m.out_dir);
    grid_for(config).pair_for_index(config.channel_pair, {config.pump_channel});

    log_info("running fringe sweep: " + std::to_string(config.sweep->points) +
             " points, " + io::format_double(config.duration_s) + " s per point");
    const sim::FringeResult result =
        sim::run_fringe_experiment(config, *config.sweep, m.workers);

    const std::string label = channel_label(config);
    ResultsCsv results;
    for (int slot = 1; slot <= config.n_slots; ++slot) {
        std::vector<std::pair<double, double>> raw_points, sub_points;
        io::CsvWriter csv({"phase_rad", "coincidences", "accidentals", "duration_s"});
        for (const auto& cell : result.cells) {
            if (cell.slot != slot) {
                continue;
            }
            csv.begin_row()
                .field(cell.phase_rad)
                .field(cell.coincidences)
                .field(cell.accidentals)
                .field(cell.duration_s);
            raw_points.emplace_back(cell.phase_rad,
                                    static_cast<double>(cell.coincidences));
            sub_points.emplace_back(cell.phase_rad,
                                    std::max(0.0, static_cast<double>(cell.coincidences -
                                                                      cell.accidentals)));
        }
        const std::string stem = m.out_dir + "/fringe_" + label + "_T" +
                                 std::to_string(slot);
        csv.save(stem + ".csv");

        const auto fit = analysis::fit_fringe(raw_points);
        const double span = raw_points.back().first - raw_points.front().first;
        const auto fit_sub =
            analysis::fit_fringe(sub_points, std::min(fit.period_rad, span));
        results.add("visibility_raw_T" + std::to_string(slot), fit.visibility,
                    fit.visibility_sigma);
        results.add("visibility_subtracted_T" + std::to_string(slot), fit_sub.visibility,
                    fit_sub.visibility_sigma);
        results.add("fringe_period_rad_T" + std::to_string(slot), fit.period_rad);
        results.add("chsh_violation_T" + std::to_string(slot),
                    analysis::chsh_violation(fit.visibility) ? 1.0 : 0.0);

        io::SvgPlot plot("fringe " + label + " T" + std::to_string(slot), "phase (rad)",
                         "coincidences");
        plot.add_points(raw_points);
        std::vector<std::pair<double, double>> curve;
        const double lo = raw_points.front().first, hi = raw_points.back().first;
        for (int i = 0; i <= 200; ++i) {
            const double x = lo + (hi - lo) * i / 200.0;
            curve.emplace_back(
                x, fit.baseline * (1.0 - fit.visibility *
                                             std::cos(2 * std::numbers::pi * x /
                                                          fit.period_rad -
                                                      fit.phase_offset_rad)));
        }
        plot.add_curve(curve);
        plot.save(stem + ".svg");
    }

    io::CsvWriter singles({"detector", "counts"});
    for (const auto& [det, count] : result.totals.singles) {
        singles.begin_row().field(static_cast<int64_t>(det)).field(count);
    }
    singles.save(m.out_dir + "/singles.csv");
    results.save(m.out_dir + "/results.csv");
    return kExitOk;
}

int cmd_hom(const RunManifest& m) {
    const sim::ExperimentConfig config = load_for_run(m);
    check_positive_duration(config);
    if (!config.hom) {
        throw sim::ConfigError("hom runs need a hom stanza with two source slots");
    }
    ensure_out_dir(m.out_dir);

    std::vector<double> delays = config.hom->delays();
    if (config.hom->extra_baseline_delay_ps != 0.0) {
        delays.push_back(config.hom->extra_baseline_delay_ps);
    }
    log_info("running hom scan over " + std::to_string(delays.size()) + " delays");
    const auto points = sim::run_hom_experiment(config, delays, m.workers);

    const std::string label = channel_label(config);
    const std::string name = "hom_" + label + "-T" + std::to_string(config.hom->slot_a) +
                             "_" + label + "-T" + std::to_string(config.hom->slot_b);
    io::CsvWriter csv({"delay_ps", "fourfold", "dark_fourfold"});
    size_t dip_idx = 0, base_idx = 0;
    for (size_t i = 0; i < points.size(); ++i) {
        csv.begin_row()
            .field(points[i].delay_ps)
            .field(points[i].fourfold)
            .field(points[i].dark_fourfold);
        if (std::abs(points[i].delay_ps) < std::abs(points[dip_idx].delay_ps)) {
            dip_idx = i;
        }
        if (std::abs(points[i].delay_ps) > std::abs(points[base_idx].delay_ps)) {
            base_idx = i;
        }
    }
    csv.save(m.out_dir + "/" + name + ".csv");

    const double dip = static_cast<double>(points[dip_idx].fourfold);
    const double base = static_cast<double>(points[base_idx].fourfold);
    const double dark = static_cast<double>(points[dip_idx].dark_fourfold);
    const auto vis = analysis::hom_visibility(
        dip, base, dark < base ? std::optional<double>(dark) : std::nullopt);

    ResultsCsv results;
    results.add("hom_raw_visibility", vis.raw, vis.raw_sigma);
    results.add("hom_net_visibility", vis.net, vis.net_sigma);
    results.save(m.out_dir + "/results.csv");

    io::SvgPlot plot("four-fold dip " + label, "delay (ps)", "fourfolds");
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : points) {
        pts.emplace_back(p.delay_ps, static_cast<double>(p.fourfold));
    }
    plot.add_points(pts);
    plot.save(m.out_dir + "/" + name + ".svg");
    return kExitOk;
}

int cmd_budget(const RunManifest& m, bool channels) {
    const sim::ExperimentConfig config = load_for_run(m);
    if (channels) {
        const ChannelGrid grid = grid_for(config);
        const ItuChannel pump{config.pump_channel};
        const int n = grid.max_pair_index(pump);
        char line[128];
        for (int k = n; k >= 1; --k) {
            const ChannelPair pair = grid.pair_for_index(k, pump);
            std::snprintf(line, sizeof(line),
                          "Signal %d - Idler %d  C%d - C%d  %.2f - %.2f", k, k,
                          pair.signal.index, pair.idler.index, pair.signal_wavelength_nm,
                          pair.idler_wavelength_nm);
            std::cout << line << "\n";
        }
        std::snprintf(line, sizeof(line), "Pump  C%d  %.2f", pump.index,
                      grid.wavelength_nm(pump));
        std::cout << line << "\n";
        return kExitOk;
    }
    for (const auto& [path, ledger] : config.loss_paths) {
        const auto total = analysis::ledger_total(ledger);
        std::string name = path;
        for (auto& ch : name) {
            ch = static_cast<char>(std::toupper(ch));
        }
        char line[160];
        std::snprintf(line, sizeof(line), "%s  %.1f dB  transmittance %.4g", name.c_str(),
                      total.total_db, total.transmittance);
        std::cout << line << "\n";
        for (const auto& [element, db] : ledger.entries) {
            std::snprintf(line, sizeof(line), "  %-12s %.2f dB", element.c_str(), db);
            std::cout << line << "\n";
        }
    }
    if (config.loss_paths.empty()) {
        std::cout << "no loss ledgers configured: 0 dB, transmittance 1\n";
    }
    return kExitOk;
}

int cmd_car_scan(const RunManifest& m) {
    const sim::ExperimentConfig config = load_for_run(m);
    check_positive_duration(config);
    if (!config.scan) {
        throw sim::ConfigError("car-scan runs need a scan stanza");
    }
    ensure_out_dir(m.out_dir);

    log_info("running car scan");
    const auto points = sim::run_car_scan(config, m.workers);
    io::CsvWriter csv({"sweep_value", "car", "car_oracle"});
    for (const auto& p : points) {
        csv.begin_row().field(p.sweep_value).field(p.car).field(p.car_oracle);
    }
    csv.save(m.out_dir + "/car_scan.csv");
    return kExitOk;
}

int cmd_oracle(const RunManifest& m) {
    const sim::ExperimentConfig config = load_for_run(m);
    const double phi_p = config.pump_phase_rad.empty() ? 0.0 : config.pump_phase_rad[0];
    const double phi_s = config.signal_phase_rad;
    const double phi_i = config.idler_phase_rad;

    std::printf("analytic fringe (phi_p=%.4f, phi_s=%.4f, phi_i=%.4f, v=%.3f): %.6f\n",
                phi_p, phi_s, phi_i, config.v_cap,
                oracle::analytic_fringe(phi_p, phi_s, phi_i, config.v_cap));

    std::printf("arrival table (path enumeration, v=1):\n");
    const auto table = oracle::brute_force_state_propagation(phi_p, phi_s, phi_i);
    const char* names[3] = {"early", "central", "late"};
    std::printf("%-10s", "");
    for (const auto* n : names) {
        std::printf("%10s", n);
    }
    std::printf("\n");
    for (int i = 0; i < 3; ++i) {
        std::printf("%-10s", names[i]);
        for (int j = 0; j < 3; ++j) {
            std::printf("%10.6f", table[i][j]);
        }
        std::printf("\n");
    }

    const auto params = sim::oracle_params_for(config, 1);
    try {
        std::printf("expected CAR: %.3f\n", oracle::analytic_car(params));
    } catch (const std::exception&) {
        std::printf("expected CAR: unbounded (no accidental floor)\n");
    }
    std::printf("expected raw fringe visibility: %.4f\n",
                oracle::expected_fringe_visibility(params));
    const auto hom = oracle::analytic_hom(0.0, params);
    std::printf("hom raw visibility at zero delay: %.4f\n", hom.raw_visibility);
    return kExitOk;
}

int cmd_grid(const RunManifest& m) {
    const sim::ExperimentConfig config = load_for_run(m);
    const ChannelGrid grid = grid_for(config);
    std::cout << "# index wavelength_nm\n";
    char line[64];
    for (const int index : grid.channel_indices()) {
        std::snprintf(line, sizeof(line), "%d %.2f", index,
                      grid.wavelength_nm({index}));
        std::cout << line << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time- and wavelength-multiplexed entanglement source simulator"};
    app.require_subcommand(1);

    RunManifest manifest;
    bool budget_channels = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", manifest.config_path, "experiment config file");
        if (needs_config) {
            opt->required();
        }
        cmd->add_option("--out", manifest.out_dir, "output directory");
        cmd->add_option("--seed", manifest.seed, "override the RNG seed");
        cmd->add_option("--workers", manifest.workers,
                        "worker threads (default: available parallelism)");
        cmd->add_option("--duration", manifest.duration_s,
                        "override the per-point duration in seconds");
    };

    CLI::App* fringe = app.add_subcommand("fringe", "two-photon interference sweep");
    add_common(fringe, true);
    CLI::App* hom = app.add_subcommand("hom", "four-fold interference between time slots");
    add_common(hom, true);
    CLI::App* budget = app.add_subcommand("budget", "loss budgets and channel plan");
    add_common(budget, false);
    budget->add_flag("--channels", budget_channels, "print the signal/idler channel plan");
    CLI::App* car = app.add_subcommand("car-scan", "coincidence-to-accidental ratio scan");
    add_common(car, true);
    CLI::App* orc = app.add_subcommand("oracle", "print analytic predictions");
    add_common(orc, false);
    CLI::App* grid = app.add_subcommand("grid", "print the wavelength grid table");
    add_common(grid, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (fringe->parsed()) {
            return cmd_fringe(manifest);
        }
        if (hom->parsed()) {
            return cmd_hom(manifest);
        }
        if (budget->parsed()) {
            return cmd_budget(manifest, budget_channels);
        }
        if (car->parsed()) {
            return cmd_car_scan(manifest);
        }
        if (orc->parsed()) {
            return cmd_oracle(manifest);
        }
        if (grid->parsed()) {
            return cmd_grid(manifest);
        }
    } catch (const sim::ConfigError& e) {
        std::cerr << "entmux: config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "entmux: config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::out_of_range& e) {
        std::cerr << "entmux: config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "entmux: error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
