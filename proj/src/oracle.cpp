#include "entmux/oracle.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace entmux::oracle {

namespace {

using Complex = std::complex<double>;

// Probability generating function E[x^n] of the pair number per pulse.
double pair_pgf(double x, double mu, PairStatistics stats) {
    if (stats == PairStatistics::thermal) {
        const double q = mu / (1.0 + mu);
        return (1.0 - q) / (1.0 - q * x);
    }
    return std::exp(mu * (x - 1.0));
}

// E[z^{n_b}] for the photon count in one of the two creation bins, each pair
// choosing a bin with probability 1/2.
double bin_pgf(double z, double mu, PairStatistics stats) {
    return pair_pgf(0.5 * (1.0 + z), mu, stats);
}

}  // namespace

double analytic_fringe(double phi_p, double phi_s, double phi_i, double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("fringe contrast must lie in [0, 1]");
    }
    return 0.125 * (1.0 - v * std::cos(2.0 * phi_p - phi_s - phi_i));
}

std::array<std::array<double, 3>, 3> brute_force_state_propagation(double phi_p,
                                                                   double phi_s,
                                                                   double phi_i) {
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    // Pump bin amplitudes after its interferometer.
    const Complex alpha[2] = {Complex(inv_sqrt2, 0.0), -std::polar(inv_sqrt2, phi_p)};
    // Pair creation consumes two same-bin pump photons; the late branch keeps
    // the superposition's minus sign.
    const Complex gamma[2] = {alpha[0] * alpha[0], -(alpha[1] * alpha[1])};
    const Complex arm_s[2] = {Complex(inv_sqrt2, 0.0), std::polar(inv_sqrt2, phi_s)};
    const Complex arm_i[2] = {Complex(inv_sqrt2, 0.0), std::polar(inv_sqrt2, phi_i)};

    std::array<std::array<Complex, 3>, 3> sums{};
    for (int bin = 0; bin < 2; ++bin) {
        for (int a_s = 0; a_s < 2; ++a_s) {
            for (int a_i = 0; a_i < 2; ++a_i) {
                sums[bin + a_s][bin + a_i] += gamma[bin] * arm_s[a_s] * arm_i[a_i];
            }
        }
    }
    std::array<std::array<double, 3>, 3> table{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            table[i][j] = std::norm(sums[i][j]);
        }
    }
    return table;
}

double pair_probability(double mu, PairStatistics stats) {
    if (!(mu >= 0.0)) {
        throw std::invalid_argument("mu must be non-negative");
    }
    if (stats == PairStatistics::thermal) {
        return mu / (1.0 + mu);
    }
    return -std::expm1(-mu);
}

double epsilon_from_mu(double mu, PairStatistics stats) {
    if (!(mu >= 0.0)) {
        throw std::invalid_argument("mu must be non-negative");
    }
    if (mu == 0.0) {
        return 0.0;
    }
    if (stats == PairStatistics::thermal) {
        return mu / (1.0 + mu);
    }
    const double p1 = -std::expm1(-mu);
    const double p2 = 1.0 - std::exp(-mu) * (1.0 + mu);
    return p2 / p1;
}

CarBreakdown car_breakdown(const OracleParams& p) {
    if (!(p.eta_signal >= 0.0 && p.eta_signal <= 1.0 && p.eta_idler >= 0.0 &&
          p.eta_idler <= 1.0)) {
        throw std::invalid_argument("transmittances must lie in [0, 1]");
    }
    const double window_s = p.coincidence_window_ps * 1e-12;
    const double p_dark = p.dark_rate_hz * window_s;

    // Per-bin no-click probabilities: pair photons via the bin generating
    // function, pulse-locked noise via Poisson thinning, darks in the window.
    const double none_sig = bin_pgf(1.0 - p.eta_signal, p.mu, p.statistics) *
                            std::exp(-0.5 * p.raman_rate_signal * p.eta_signal) *
                            (1.0 - p_dark);
    const double none_idl = bin_pgf(1.0 - p.eta_idler, p.mu, p.statistics) *
                            std::exp(-0.5 * p.raman_rate_idler * p.eta_idler) *
                            (1.0 - p_dark);
    const double none_joint =
        bin_pgf((1.0 - p.eta_signal) * (1.0 - p.eta_idler), p.mu, p.statistics) *
        std::exp(-0.5 * (p.raman_rate_signal * p.eta_signal +
                         p.raman_rate_idler * p.eta_idler)) *
        (1.0 - p_dark) * (1.0 - p_dark);

    CarBreakdown out;
    const double coincidence_per_bin = 1.0 - none_sig - none_idl + none_joint;
    out.coincidence_per_pulse = 2.0 * coincidence_per_bin;
    out.accidental_per_pulse = 2.0 * (1.0 - none_sig) * (1.0 - none_idl);
    out.singles_signal_per_pulse = 2.0 * (1.0 - none_sig);
    out.singles_idler_per_pulse = 2.0 * (1.0 - none_idl);
    return out;
}

double analytic_car(const OracleParams& p) {
    const CarBreakdown b = car_breakdown(p);
    if (b.accidental_per_pulse <= 0.0) {
        throw std::invalid_argument("accidental probability vanishes; CAR is unbounded");
    }
    return b.coincidence_per_pulse / b.accidental_per_pulse;
}

double jitter_averaged_overlap(double delay_ps, double coherence_sigma_ps,
                               double pair_jitter_sigma_ps) {
    if (!(coherence_sigma_ps > 0.0) || !(pair_jitter_sigma_ps >= 0.0)) {
        throw std::invalid_argument("invalid temporal widths");
    }
    const double s2 = coherence_sigma_ps * coherence_sigma_ps +
                      pair_jitter_sigma_ps * pair_jitter_sigma_ps;
    return coherence_sigma_ps / std::sqrt(s2) *
           std::exp(-(delay_ps * delay_ps) / (4.0 * s2));
}

HomPrediction analytic_hom(double delay_ps, const OracleParams& p,
                           double dark_fourfold_fraction) {
    const double eps = epsilon_from_mu(p.mu, p.statistics);
    const double overlap =
        jitter_averaged_overlap(delay_ps, p.coherence_sigma_ps, p.pair_jitter_sigma_ps);
    const double dark = 0.5 * dark_fourfold_fraction;
    HomPrediction out;
    out.dip_rate = (1.0 - eps) * 0.5 * (1.0 - overlap) + eps * 0.5 + dark;
    out.baseline_rate = 0.5 + dark;
    out.raw_visibility = (out.baseline_rate - out.dip_rate) / out.baseline_rate;
    out.net_visibility = (out.baseline_rate - out.dip_rate) / (out.baseline_rate - dark);
    return out;
}

double expected_fringe_visibility(const OracleParams& p) {
    const double p1 = pair_probability(p.mu, p.statistics);
    if (p1 <= 0.0) {
        return 0.0;
    }
    const double mean_pairs =
        (p.statistics == PairStatistics::thermal) ? p.mu : p.mu;  // E[n] = mu for both
    // Incoherent floor from pairs beyond the first, relative to the coherent
    // first-pair rate.
    const double multi_floor = (mean_pairs - p1) / p1;

    // Accidentals in the central-slot coincidence window, relative to the
    // phase-averaged coherent rate. The pair-photon central marginal is 1/4
    // of emitted pairs; analyzer-filtered noise lands centrally with
    // probability 1/4 per photon.
    const double window_s = p.coincidence_window_ps * 1e-12;
    const double singles_c_sig = p.eta_signal * (mean_pairs + p.raman_rate_signal) * 0.25 +
                                 p.dark_rate_hz * window_s;
    const double singles_c_idl = p.eta_idler * (mean_pairs + p.raman_rate_idler) * 0.25 +
                                 p.dark_rate_hz * window_s;
    const double coherent = p1 * 0.125 * p.eta_signal * p.eta_idler;
    const double acc_ratio = singles_c_sig * singles_c_idl / coherent;

    return p.v_cap / (1.0 + multi_floor + acc_ratio);
}

double poisson_accidentals(double rate_a_hz, double rate_b_hz, double duration_s,
                           double window_ps) {
    return rate_a_hz * rate_b_hz * duration_s * window_ps * 1e-12;
}

}  // namespace entmux::oracle
