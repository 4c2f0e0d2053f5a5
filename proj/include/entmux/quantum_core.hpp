#pragma once

#include <array>
#include <complex>

namespace entmux::quantum {

using Complex = std::complex<double>;

/// Pump pulse after its unbalanced Michelson interferometer: a coherent
/// superposition of the short-arm and long-arm time bins,
/// (1/sqrt2)(|S> - e^{i phi}|L>).
struct PumpBinState {
    Complex amp_short;
    Complex amp_long;
    double phase_rad = 0.0;

    double norm_squared() const {
        return std::norm(amp_short) + std::norm(amp_long);
    }
};

/// Throws std::invalid_argument for a non-finite phase.
PumpBinState pump_after_umi(double phi_p);

/// Joint signal (x) idler amplitudes over the early/late emission bins.
/// Pair creation populates only |SS> and |LL>; the cross terms exist so the
/// analyzer propagation has a closed input domain.
struct TimeBinAmplitudes {
    Complex ss;
    Complex ll;
    Complex sl;
    Complex ls;

    double norm_squared() const {
        return std::norm(ss) + std::norm(ll) + std::norm(sl) + std::norm(ls);
    }
};

/// Biphoton state created from two same-bin pump photons. The long-bin
/// amplitude carries twice the pump phase and keeps the sign convention of
/// the pump superposition, so the canonical pump gives
/// (1/sqrt2)(|SS> - e^{i 2 phi}|LL>). Branch weights follow the squares of
/// the pump bin amplitudes, renormalized.
/// Throws std::invalid_argument if the pump state is not normalized.
TimeBinAmplitudes pair_state_from_pump(const PumpBinState& pump);

enum class ArrivalSlot : int { early = 0, central = 1, late = 2 };

/// Joint probabilities over the 3x3 arrival slots behind the two analyzer
/// interferometers, post-selected on both photons exiting the monitored
/// ports. Entries are scaled so that, for the canonical entangled state,
/// the single-path corner entries are 1/16 and the central-central entry is
/// (1/8)(1 - v cos(2 phi_p - phi_s - phi_i)); discarded() carries the
/// complementary weight lost to the unmonitored analyzer ports, so
/// detected_total() + discarded() == 1 exactly.
class ArrivalDistribution {
public:
    ArrivalDistribution() = default;
    ArrivalDistribution(const std::array<std::array<double, 3>, 3>& p, double discarded);

    double probability(ArrivalSlot slot_s, ArrivalSlot slot_i) const {
        return p_[static_cast<int>(slot_s)][static_cast<int>(slot_i)];
    }
    double detected_total() const;
    double discarded() const { return discarded_; }

    /// Marginal probability that the signal (idler) photon lands in a slot.
    double signal_marginal(ArrivalSlot slot) const;
    double idler_marginal(ArrivalSlot slot) const;

private:
    std::array<std::array<double, 3>, 3> p_{};
    double discarded_ = 1.0;
};

/// Propagate a biphoton state through the two analyzer UMIs with phases
/// phi_s, phi_i. Each UMI maps an early bin to {early via short, central via
/// long} and a late bin to {central via short, late via long}; the long arm
/// acquires e^{i phi}. Amplitudes into the same joint arrival slot add
/// coherently; v_cap in [0,1] scales the interference contrast, standing in
/// for phase noise and residual distinguishability.
/// Throws std::invalid_argument for an unnormalized state or v_cap outside
/// [0,1].
ArrivalDistribution analyzer_transform(const TimeBinAmplitudes& state, double phi_s,
                                       double phi_i, double v_cap);

/// Reads one entry of the distribution; central-central is the
/// post-selected two-photon interference signal.
double coincidence_probability(const ArrivalDistribution& dist, ArrivalSlot slot_s,
                               ArrivalSlot slot_i);

/// Gaussian temporal wavepacket of a filtered photon.
struct TemporalMode {
    double center_time_ps = 0.0;
    double coherence_sigma_ps = 1.9;  // 100 GHz FWHM filter
};

/// Squared overlap M of two identical Gaussian modes offset by `delay_ps`:
/// exp(-delay^2 / (4 sigma^2)). M(0) = 1 and M decreases monotonically in
/// |delay|. Throws std::invalid_argument if the mode is invalid.
double temporal_overlap(double delay_ps, const TemporalMode& mode);

/// Coincidence probability behind a 50:50 coupler fed with one photon per
/// input: the two-single-photon term (1 - M)/2, mixed with an
/// interference-free floor of weight epsilon_multi contributed by events
/// contaminated with an extra pair. Throws std::invalid_argument for
/// parameters out of range (M in [0,1], epsilon in [0,1)).
double hom_coincidence_probability(double overlap, double epsilon_multi);

}  // namespace entmux::quantum
