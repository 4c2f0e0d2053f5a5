#pragma once

#include <array>

namespace entmux::oracle {

/// Closed-form post-selected central-central coincidence probability for the
/// canonical entangled state: (1/8)(1 - v cos(2 phi_p - phi_s - phi_i)).
double analytic_fringe(double phi_p, double phi_s, double phi_i, double v);

/// Independent check of the analyzer propagation: enumerates all
/// 2 (pump bin) x 2 (signal arm) x 2 (idler arm) = 8 path amplitudes
/// explicitly, sums them coherently by joint arrival slot and squares.
/// Indexed [signal slot][idler slot] with early=0, central=1, late=2.
std::array<std::array<double, 3>, 3> brute_force_state_propagation(double phi_p,
                                                                   double phi_s,
                                                                   double phi_i);

enum class PairStatistics { thermal, poisson };

/// Probability that a pulse emits at least one pair.
double pair_probability(double mu, PairStatistics stats);

/// Probability of a second pair given at least one: the multi-pair
/// contamination weight of heralded interference. mu/(1+mu) for thermal
/// statistics.
double epsilon_from_mu(double mu, PairStatistics stats);

/// Analytic inputs mirroring the subset of the experiment configuration the
/// closed forms need.
struct OracleParams {
    double mu = 0.03;
    PairStatistics statistics = PairStatistics::thermal;
    double eta_signal = 1.0;          // end-to-end transmittance, signal path
    double eta_idler = 1.0;           // end-to-end transmittance, idler path
    double raman_rate_signal = 0.0;   // noise photons per pulse entering the signal path
    double raman_rate_idler = 0.0;
    double dark_rate_hz = 0.0;        // per detector
    double coincidence_window_ps = 1000.0;
    double pulse_period_ps = 35752.592;
    double v_cap = 1.0;
    double coherence_sigma_ps = 1.9;
    double pair_jitter_sigma_ps = 0.0;  // creation-time jitter per pair
};

/// Expected coincidence-to-accidental ratio of a pair source measured
/// without analyzers: true coincidences are same-bin signal/idler clicks,
/// accidentals the product of the per-bin singles probabilities (the
/// one-period-shift estimate). Exact in the pair statistics via the
/// generating function of the per-bin photon number; noise enters the
/// singles as independent Poisson clicks. Throws std::invalid_argument when
/// the accidental probability vanishes.
double analytic_car(const OracleParams& p);

/// Per-pulse probabilities behind analytic_car, exposed for tests and the
/// CLI oracle table.
struct CarBreakdown {
    double coincidence_per_pulse;
    double accidental_per_pulse;
    double singles_signal_per_pulse;
    double singles_idler_per_pulse;
};
CarBreakdown car_breakdown(const OracleParams& p);

/// Expected fourfold HOM interference figures at a coupler delay. Uses the
/// jitter-averaged Gaussian mode overlap and the epsilon_from_mu
/// contamination weight; dark_fourfold_fraction is the accidental fourfold
/// rate relative to the clean far-delay baseline.
struct HomPrediction {
    double dip_rate;        // relative fourfold rate at the requested delay
    double baseline_rate;   // relative fourfold rate far from overlap
    double raw_visibility;  // (baseline - dip) / baseline
    double net_visibility;  // after subtracting the accidental floor
};
HomPrediction analytic_hom(double delay_ps, const OracleParams& p,
                           double dark_fourfold_fraction = 0.0);

/// Mean Gaussian mode overlap when each photon's creation time jitters with
/// the configured sigma.
double jitter_averaged_overlap(double delay_ps, double coherence_sigma_ps,
                               double pair_jitter_sigma_ps);

/// Expected raw fringe visibility of the post-selected two-photon
/// interference, combining the contrast cap, the incoherent multi-pair
/// floor and the accidental background in the central slot.
double expected_fringe_visibility(const OracleParams& p);

/// Expected accidental coincidences between two independent Poisson streams
/// of the given rates over a duration, for a matching window.
double poisson_accidentals(double rate_a_hz, double rate_b_hz, double duration_s,
                           double window_ps);

}  // namespace entmux::oracle
