#include "entmux/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace entmux::analysis {

namespace {

struct LinearFringe {
    double baseline;
    double amp_cos;
    double amp_sin;
    double weighted_sse;
    bool ok;
    std::array<std::array<double, 3>, 3> covariance{};
};

bool invert3x3(const std::array<std::array<double, 3>, 3>& m,
               std::array<std::array<double, 3>, 3>& inv) {
    const double det =
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
        m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
        m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (std::abs(det) < 1e-30) {
        return false;
    }
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return true;
}

// Exact weighted least squares of y = B - a cos(w x) - b sin(w x).
LinearFringe solve_linear(std::span<const std::pair<double, double>> pts, double omega,
                          std::span<const double> weights) {
    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> rhs{};
    for (size_t k = 0; k < pts.size(); ++k) {
        const double x = pts[k].first;
        const double y = pts[k].second;
        const double w = weights[k];
        const std::array<double, 3> row = {1.0, -std::cos(omega * x), -std::sin(omega * x)};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                m[i][j] += w * row[i] * row[j];
            }
            rhs[i] += w * row[i] * y;
        }
    }
    const std::array<std::array<double, 3>, 3> normal = m;
    // Gaussian elimination with partial pivoting.
    std::array<int, 3> piv = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(m[piv[r]][col]) > std::abs(m[piv[best]][col])) {
                best = r;
            }
        }
        std::swap(piv[col], piv[best]);
        const double d = m[piv[col]][col];
        if (std::abs(d) < 1e-14) {
            return {0.0, 0.0, 0.0, std::numeric_limits<double>::infinity(), false};
        }
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[piv[r]][col] / d;
            for (int c = col; c < 3; ++c) {
                m[piv[r]][c] -= f * m[piv[col]][c];
            }
            rhs[piv[r]] -= f * rhs[piv[col]];
        }
    }
    std::array<double, 3> sol{};
    for (int col = 2; col >= 0; --col) {
        double acc = rhs[piv[col]];
        for (int c = col + 1; c < 3; ++c) {
            acc -= m[piv[col]][c] * sol[c];
        }
        sol[col] = acc / m[piv[col]][col];
    }
    double sse = 0.0;
    for (size_t k = 0; k < pts.size(); ++k) {
        const double x = pts[k].first;
        const double fit =
            sol[0] - sol[1] * std::cos(omega * x) - sol[2] * std::sin(omega * x);
        const double r = pts[k].second - fit;
        sse += weights[k] * r * r;
    }
    LinearFringe out{sol[0], sol[1], sol[2], sse, true, {}};
    invert3x3(normal, out.covariance);  // weights are inverse variances
    return out;
}

std::vector<double> poisson_weights(std::span<const std::pair<double, double>> pts) {
    std::vector<double> w(pts.size());
    for (size_t k = 0; k < pts.size(); ++k) {
        w[k] = 1.0 / std::max(pts[k].second, 1.0);
    }
    return w;
}

void reweight_from_model(std::span<const std::pair<double, double>> pts, double omega,
                         const LinearFringe& lf, std::vector<double>& w) {
    for (size_t k = 0; k < pts.size(); ++k) {
        const double x = pts[k].first;
        const double model =
            lf.baseline - lf.amp_cos * std::cos(omega * x) - lf.amp_sin * std::sin(omega * x);
        w[k] = 1.0 / std::max(model, 1.0);
    }
}

double weighted_sse_at_period(std::span<const std::pair<double, double>> pts,
                              double period, std::vector<double> weights) {
    const double omega = 2.0 * std::numbers::pi / period;
    LinearFringe lf = solve_linear(pts, omega, weights);
    for (int it = 0; it < 2 && lf.ok; ++it) {
        reweight_from_model(pts, omega, lf, weights);
        lf = solve_linear(pts, omega, weights);
    }
    return lf.ok ? lf.weighted_sse : std::numeric_limits<double>::infinity();
}

}  // namespace

FringeFit fit_fringe(std::span<const std::pair<double, double>> points,
                     std::optional<double> fixed_period) {
    if (points.size() < 5) {
        throw std::invalid_argument("fringe fit needs at least 5 points");
    }
    double x_min = points[0].first, x_max = points[0].first;
    double y_min = points[0].second, y_max = points[0].second;
    for (const auto& [x, y] : points) {
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
        if (y < 0.0) {
            throw std::invalid_argument("counts must be non-negative");
        }
    }
    const double span = x_max - x_min;
    const bool flat = (y_max - y_min) <= 1e-12 * std::max(1.0, std::abs(y_max));

    double period = 0.0;
    if (fixed_period) {
        period = *fixed_period;
        if (!(period > 0.0)) {
            throw std::invalid_argument("period must be positive");
        }
        if (span < period * (1.0 - 1e-9)) {
            throw std::invalid_argument("points must span at least one period");
        }
    } else {
        if (flat) {
            throw std::invalid_argument("flat counts: period is indeterminate");
        }
        // Scan candidate periods between ~2.5 samples and the full span,
        // then refine the best by golden-section search.
        const double spacing = span / static_cast<double>(points.size() - 1);
        const double p_lo = 2.5 * spacing;
        const double p_hi = span * 1.02;
        if (p_lo >= p_hi) {
            throw std::invalid_argument("too few points to resolve a period");
        }
        const auto weights = poisson_weights(points);
        const int n_scan = 512;
        double best_p = p_lo, best_sse = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= n_scan; ++i) {
            // uniform in frequency: short periods get proportionally denser coverage
            const double f = 1.0 / p_hi + (1.0 / p_lo - 1.0 / p_hi) * i / n_scan;
            const double p = 1.0 / f;
            const double sse = weighted_sse_at_period(points, p, weights);
            if (sse < best_sse) {
                best_sse = sse;
                best_p = p;
            }
        }
        double lo = best_p * 0.96, hi = std::min(best_p * 1.04, p_hi);
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
        double fc = weighted_sse_at_period(points, c, weights);
        double fd = weighted_sse_at_period(points, d, weights);
        for (int it = 0; it < 60; ++it) {
            if (fc < fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - gr * (hi - lo);
                fc = weighted_sse_at_period(points, c, weights);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + gr * (hi - lo);
                fd = weighted_sse_at_period(points, d, weights);
            }
        }
        period = 0.5 * (lo + hi);
    }

    const double omega = 2.0 * std::numbers::pi / period;
    auto weights = poisson_weights(points);
    LinearFringe lf = solve_linear(points, omega, weights);
    for (int it = 0; it < 3 && lf.ok; ++it) {
        reweight_from_model(points, omega, lf, weights);
        lf = solve_linear(points, omega, weights);
    }
    if (!lf.ok) {
        throw std::invalid_argument("degenerate fringe fit");
    }

    FringeFit fit;
    fit.period_rad = period;
    fit.baseline = lf.baseline;
    const double amp = std::hypot(lf.amp_cos, lf.amp_sin);
    fit.visibility =
        (lf.baseline > 0.0) ? std::clamp(amp / lf.baseline, 0.0, 1.0) : 0.0;
    fit.phase_offset_rad = flat ? 0.0 : std::atan2(lf.amp_sin, lf.amp_cos);
    if (lf.baseline > 0.0) {
        // Propagate the weighted-fit covariance through V = |(a,b)| / B.
        const double b0 = lf.baseline;
        std::array<double, 3> g{};
        if (amp > 0.0) {
            g = {-amp / (b0 * b0), lf.amp_cos / (amp * b0), lf.amp_sin / (amp * b0)};
        } else {
            g = {0.0, 1.0 / b0, 1.0 / b0};
        }
        double var = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                var += g[static_cast<size_t>(i)] * lf.covariance[static_cast<size_t>(i)][static_cast<size_t>(j)] *
                       g[static_cast<size_t>(j)];
            }
        }
        fit.visibility_sigma = var > 0.0 ? std::sqrt(var) : 0.0;
    }
    double sse = 0.0;
    for (const auto& [x, y] : points) {
        const double model =
            lf.baseline - lf.amp_cos * std::cos(omega * x) - lf.amp_sin * std::sin(omega * x);
        sse += (y - model) * (y - model);
    }
    fit.residual_rms = std::sqrt(sse / static_cast<double>(points.size()));
    return fit;
}

double visibility(double c_max, double c_min) {
    if (!(c_max >= c_min && c_min >= 0.0)) {
        throw std::invalid_argument("need c_max >= c_min >= 0");
    }
    if (c_max + c_min <= 0.0) {
        throw std::invalid_argument("visibility denominator is zero");
    }
    return (c_max - c_min) / (c_max + c_min);
}

double visibility_accidental_subtracted(double c_max, double c_min, double accidentals) {
    if (!(accidentals >= 0.0)) {
        throw std::invalid_argument("accidentals must be non-negative");
    }
    const double hi = c_max - accidentals;
    const double lo = std::max(c_min - accidentals, 0.0);
    if (hi <= 0.0) {
        throw std::invalid_argument("accidentals exceed the fringe maximum");
    }
    return (hi - lo) / (hi + lo);
}

bool chsh_violation(double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("visibility must lie in [0, 1]");
    }
    return v > 1.0 / std::numbers::sqrt2;
}

double compute_car(double coincidences, double accidentals) {
    if (!(coincidences >= 0.0)) {
        throw std::invalid_argument("coincidences must be non-negative");
    }
    if (!(accidentals > 0.0)) {
        throw std::invalid_argument(
            "zero accidentals: CAR undefined, report a lower bound instead");
    }
    return coincidences / accidentals;
}

HomVisibility hom_visibility(double dip_counts, double baseline_counts,
                             std::optional<double> dark_counts) {
    if (!(baseline_counts > 0.0)) {
        throw std::invalid_argument("baseline counts must be positive");
    }
    if (!(dip_counts >= 0.0)) {
        throw std::invalid_argument("dip counts must be non-negative");
    }
    const double dark = dark_counts.value_or(0.0);
    if (dark_counts && !(dark >= 0.0 && dark < baseline_counts)) {
        throw std::invalid_argument("dark counts must lie in [0, baseline)");
    }

    const double b = baseline_counts;
    const double d = dip_counts;
    HomVisibility out;
    out.raw = std::clamp((b - d) / b, -1.0, 1.0);
    out.raw_sigma = std::sqrt(d / (b * b) + d * d / (b * b * b));
    const double denom = b - dark;
    out.net = std::clamp((b - d) / denom, -1.0, 1.0);
    // Poisson propagation through net = (b - d) / (b - k).
    const double dd = 1.0 / denom;
    const double db = (d - dark) / (denom * denom);
    const double dk = (b - d) / (denom * denom);
    out.net_sigma = std::sqrt(d * dd * dd + b * db * db + dark * dk * dk);
    return out;
}

LedgerTotal ledger_total(const LossLedger& ledger) {
    LedgerTotal out;
    for (const auto& [name, db] : ledger.entries) {
        if (!(db >= 0.0)) {
            throw std::invalid_argument("negative loss entry: " + name);
        }
        out.total_db += db;
    }
    out.transmittance = std::pow(10.0, -out.total_db / 10.0);
    return out;
}

}  // namespace entmux::analysis
