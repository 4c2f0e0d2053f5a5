#include "entmux/quantum_core.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace entmux::quantum {

namespace {

constexpr double kNormTolerance = 1e-9;
const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

}  // namespace

PumpBinState pump_after_umi(double phi_p) {
    if (!std::isfinite(phi_p)) {
        throw std::invalid_argument("pump phase must be finite");
    }
    PumpBinState s;
    s.amp_short = Complex(kInvSqrt2, 0.0);
    s.amp_long = -std::polar(kInvSqrt2, phi_p);
    s.phase_rad = phi_p;
    return s;
}

TimeBinAmplitudes pair_state_from_pump(const PumpBinState& pump) {
    if (std::abs(pump.norm_squared() - 1.0) > kNormTolerance) {
        throw std::invalid_argument("pump state is not normalized");
    }
    // Two pump photons are consumed from the same bin, so each branch
    // amplitude is the square of the pump bin amplitude. The late branch
    // keeps the superposition's minus sign.
    const Complex ss_raw = pump.amp_short * pump.amp_short;
    const Complex ll_raw = -(pump.amp_long * pump.amp_long);
    const double norm = std::sqrt(std::norm(ss_raw) + std::norm(ll_raw));
    TimeBinAmplitudes out;
    out.ss = ss_raw / norm;
    out.ll = ll_raw / norm;
    out.sl = Complex(0.0, 0.0);
    out.ls = Complex(0.0, 0.0);
    return out;
}

ArrivalDistribution::ArrivalDistribution(const std::array<std::array<double, 3>, 3>& p,
                                         double discarded)
    : p_(p), discarded_(discarded) {}

double ArrivalDistribution::detected_total() const {
    double total = 0.0;
    for (const auto& row : p_) {
        for (double v : row) {
            total += v;
        }
    }
    return total;
}

double ArrivalDistribution::signal_marginal(ArrivalSlot slot) const {
    double total = 0.0;
    for (int j = 0; j < 3; ++j) {
        total += p_[static_cast<int>(slot)][j];
    }
    return total;
}

double ArrivalDistribution::idler_marginal(ArrivalSlot slot) const {
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        total += p_[i][static_cast<int>(slot)];
    }
    return total;
}

ArrivalDistribution analyzer_transform(const TimeBinAmplitudes& state, double phi_s,
                                       double phi_i, double v_cap) {
    if (!(v_cap >= 0.0 && v_cap <= 1.0)) {
        throw std::invalid_argument("v_cap must lie in [0, 1]");
    }
    if (!std::isfinite(phi_s) || !std::isfinite(phi_i)) {
        throw std::invalid_argument("analyzer phases must be finite");
    }
    if (std::abs(state.norm_squared() - 1.0) > kNormTolerance) {
        throw std::invalid_argument("biphoton state is not normalized");
    }

    // Each analyzer UMI is a double-pass Michelson: amplitude 1/2 per arm on
    // the monitored output port, with e^{i phi} on the long arm.
    const Complex arm_s[2] = {Complex(0.5, 0.0), std::polar(0.5, phi_s)};
    const Complex arm_i[2] = {Complex(0.5, 0.0), std::polar(0.5, phi_i)};
    const Complex amp[2][2] = {{state.ss, state.sl}, {state.ls, state.ll}};

    std::array<std::array<Complex, 3>, 3> coherent{};
    std::array<std::array<double, 3>, 3> incoherent{};
    for (int bin_s = 0; bin_s < 2; ++bin_s) {
        for (int bin_i = 0; bin_i < 2; ++bin_i) {
            if (amp[bin_s][bin_i] == Complex(0.0, 0.0)) {
                continue;
            }
            for (int a_s = 0; a_s < 2; ++a_s) {
                for (int a_i = 0; a_i < 2; ++a_i) {
                    const Complex path = amp[bin_s][bin_i] * arm_s[a_s] * arm_i[a_i];
                    coherent[bin_s + a_s][bin_i + a_i] += path;
                    incoherent[bin_s + a_s][bin_i + a_i] += std::norm(path);
                }
            }
        }
    }

    // The factor 2 sets the post-selected normalization convention stated in
    // the class description (corners 1/16, phase-averaged centre 1/8).
    std::array<std::array<double, 3>, 3> p{};
    double detected = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double value =
                2.0 * (v_cap * std::norm(coherent[i][j]) + (1.0 - v_cap) * incoherent[i][j]);
            p[i][j] = value;
            detected += value;
        }
    }
    return ArrivalDistribution(p, 1.0 - detected);
}

double coincidence_probability(const ArrivalDistribution& dist, ArrivalSlot slot_s,
                               ArrivalSlot slot_i) {
    return dist.probability(slot_s, slot_i);
}

double temporal_overlap(double delay_ps, const TemporalMode& mode) {
    if (!(mode.coherence_sigma_ps > 0.0)) {
        throw std::invalid_argument("coherence sigma must be positive");
    }
    const double sigma = mode.coherence_sigma_ps;
    return std::exp(-(delay_ps * delay_ps) / (4.0 * sigma * sigma));
}

double hom_coincidence_probability(double overlap, double epsilon_multi) {
    if (!(overlap >= 0.0 && overlap <= 1.0)) {
        throw std::invalid_argument("overlap must lie in [0, 1]");
    }
    if (!(epsilon_multi >= 0.0 && epsilon_multi < 1.0)) {
        throw std::invalid_argument("epsilon_multi must lie in [0, 1)");
    }
    return (1.0 - epsilon_multi) * 0.5 * (1.0 - overlap) + epsilon_multi * 0.5;
}

}  // namespace entmux::quantum
