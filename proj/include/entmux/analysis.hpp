#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace entmux::analysis {

/// Result of a sinusoidal fringe fit: counts = baseline * (1 - V cos(2 pi
/// phase / period - offset)).
struct FringeFit {
    double visibility = 0.0;    // clamped to [0, 1]
    double phase_offset_rad = 0.0;
    double period_rad = 0.0;
    double baseline = 0.0;
    double residual_rms = 0.0;
    double visibility_sigma = 0.0;  // Poisson-weighted fit uncertainty
};

/// Least-squares fringe fit. For a fixed period the model is linear in
/// (baseline, quadrature amplitudes) and solved exactly; a free period adds
/// a one-dimensional search. Counts are weighted as Poisson
/// (iteratively reweighted by the model prediction).
/// Throws std::invalid_argument for fewer than 5 points, a span below one
/// period, or flat counts with a free period.
FringeFit fit_fringe(std::span<const std::pair<double, double>> points,
                     std::optional<double> fixed_period = std::nullopt);

/// Fringe contrast (c_max - c_min) / (c_max + c_min).
/// Requires c_max >= c_min >= 0 and c_max > 0.
double visibility(double c_max, double c_min);

/// Contrast after subtracting the accidental background from both extrema.
double visibility_accidental_subtracted(double c_max, double c_min, double accidentals);

/// True iff the two-photon visibility strictly exceeds 1/sqrt(2), the
/// threshold above which the CHSH inequality is violated.
/// Throws std::invalid_argument outside [0, 1].
bool chsh_violation(double v);

/// Coincidence-to-accidental ratio. Throws std::invalid_argument when the
/// accidental count is zero (report a lower bound instead).
double compute_car(double coincidences, double accidentals);

/// Raw and dark-subtracted dip visibilities with Poisson uncertainties.
struct HomVisibility {
    double raw = 0.0;
    double net = 0.0;
    double raw_sigma = 0.0;
    double net_sigma = 0.0;
};

/// raw = (baseline - dip) / baseline; net = (baseline - dip) /
/// (baseline - dark). Both clamped to [-1, 1]. Requires baseline > 0 and,
/// when given, dark < baseline.
HomVisibility hom_visibility(double dip_counts, double baseline_counts,
                             std::optional<double> dark_counts = std::nullopt);

/// Ordered list of named optical losses along one path.
struct LossLedger {
    std::vector<std::pair<std::string, double>> entries;  // (element, dB >= 0)
};

struct LedgerTotal {
    double total_db = 0.0;
    double transmittance = 1.0;
};

/// Sum of the ledger in dB and the corresponding transmittance
/// 10^(-total/10). Throws std::invalid_argument on a negative entry.
LedgerTotal ledger_total(const LossLedger& ledger);

}  // namespace entmux::analysis
