#pragma once

// Numerical Poincare maps of the switched system: the half-maps between the
// section planes mean = alpha and mean = beta, their composition P, the
// finite-difference Jacobian of the reduced guiding map Pi = E o P o R_alpha
// (which the linearization theory predicts to be A(s)^2), and empirical
// contraction/growth rate measurement along iterated sections.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "thermorelay/characteristic.hpp"
#include "thermorelay/common.hpp"
#include "thermorelay/dynamics.hpp"
#include "thermorelay/eigen.hpp"
#include "thermorelay/relay.hpp"
#include "thermorelay/spectral_system.hpp"
#include "thermorelay/stability.hpp"

namespace thermorelay {

enum class SectionPlane { Alpha, Beta };

struct SectionPoint {
    ModeVector v;
    SectionPlane plane = SectionPlane::Alpha;
};

/// Lifts guiding coordinates (indices in J) onto the section plane by solving
/// the mean constraint for v0; guided components are taken from `fill`.
inline ModeVector lift_to_section(const SpectralSystem& sys, const std::vector<double>& j_coords,
                                  double plane_value, const ModeVector& fill) {
    ModeVector out = fill;
    const std::vector<std::size_t> J = sys.sensor_indices();
    double weighted = 0.0;
    for (std::size_t k = 0; k < J.size(); ++k) {
        out.values[J[k]] = j_coords[k];
        weighted += sys.m_coeffs[J[k]] * j_coords[k];
    }
    out.values[0] = (plane_value - weighted) / sys.m0();
    return out;
}

struct HalfMapResult {
    SectionPoint point;
    double elapsed = 0.0;
    bool grazing = false;
};

namespace detail {

inline HalfMapResult run_half_map(const SpectralSystem& sys, const ModeVector& start, int h,
                                  double alpha, double beta) {
    // Analytic horizon bound: h * mean(t) >= h m0 v0 + m0 K0 t
    //   + sum_J m_j K_j / lambda_j - sum_J |m_j (v_j - h K_j/lambda_j)|,
    // so the crossing happens no later than where this envelope reaches the
    // target.
    const double target = (h > 0) ? beta : alpha;
    double envelope = h * sys.m0() * start.values[0];
    for (std::size_t j : sys.guiding_indices) {
        if (j == 0) continue;
        const double c = (h * sys.k_coeffs[j]) / sys.lambdas[j];
        envelope += sys.m_coeffs[j] * sys.k_coeffs[j] / sys.lambdas[j] -
                    std::abs(sys.m_coeffs[j] * (start.values[j] - c));
    }
    double horizon = (h * target - envelope) / (sys.m0() * sys.k0());
    horizon = std::max(horizon * 1.5, 1.0);

    RelayState relay;
    relay.alpha = alpha;
    relay.beta = beta;
    relay.output = h;

    const EventResult res = next_switching(sys, start, relay, start.time + horizon);
    if (res.status != EventStatus::Found)
        throw NumericError(NumericError::Kind::DetectionFailure,
                           "half map: no section crossing within the analytic horizon");
    HalfMapResult out;
    out.elapsed = res.event->t - start.time;
    out.grazing = res.event->grazing;
    out.point.v = advance_modes(sys, start, h, out.elapsed);
    out.point.plane = (h > 0) ? SectionPlane::Beta : SectionPlane::Alpha;
    return out;
}

}  // namespace detail

/// First hit of the plane mean = beta under relay output +1.
inline HalfMapResult map_P_alpha(const SpectralSystem& sys, const SectionPoint& p, double alpha,
                                 double beta) {
    if (!(mean_temperature(sys, p.v) < beta))
        throw NumericError(NumericError::Kind::HypothesisViolated,
                           "map_P_alpha: point must satisfy mean < beta");
    return detail::run_half_map(sys, p.v, +1, alpha, beta);
}

/// First hit of the plane mean = alpha under relay output -1.
inline HalfMapResult map_P_beta(const SpectralSystem& sys, const SectionPoint& p, double alpha,
                                double beta) {
    if (!(mean_temperature(sys, p.v) > alpha))
        throw NumericError(NumericError::Kind::HypothesisViolated,
                           "map_P_beta: point must satisfy mean > alpha");
    return detail::run_half_map(sys, p.v, -1, alpha, beta);
}

struct FullMapResult {
    SectionPoint point;  // back on the plane mean = alpha
    double t1 = 0.0;     // first switching time
    double period = 0.0; // total elapsed time
    bool grazing = false;
};

/// Full return map P = P_beta o P_alpha.
inline FullMapResult map_P(const SpectralSystem& sys, const SectionPoint& p, double alpha,
                           double beta) {
    const HalfMapResult up = map_P_alpha(sys, p, alpha, beta);
    const HalfMapResult down = map_P_beta(sys, up.point, alpha, beta);
    FullMapResult out;
    out.point = down.point;
    out.t1 = up.elapsed;
    out.period = up.elapsed + down.elapsed;
    out.grazing = up.grazing || down.grazing;
    return out;
}

struct JacobianResult {
    SquareMatrix matrix;        // d Pi / d phi restricted to J coordinates
    bool differentiable = true; // false when a perturbation changes the event pattern
    std::vector<std::size_t> suspect_columns;
};

/// Central finite differences of the reduced guiding return map at the fixed
/// point psi. The section constraint is maintained exactly through the
/// lifting operator (v0 solved from the mean), never by projection after the
/// fact. A column whose one-sided return times disagree at finite size marks
/// a grazing-induced discontinuity.
inline JacobianResult guiding_jacobian_fd(const SpectralSystem& sys, const PeriodicSolution& sol,
                                          double eps = 0.0) {
    const std::vector<std::size_t> J = sys.sensor_indices();
    const std::size_t N = J.size();
    const double alpha = mean_temperature(sys, sol.psi);
    const double beta = alpha + sol.F_value;

    std::vector<double> base(N);
    for (std::size_t k = 0; k < N; ++k) base[k] = sol.psi.values[J[k]];
    double base_norm = 0.0;
    for (double x : sol.psi.values) base_norm += x * x;
    base_norm = std::sqrt(base_norm);
    if (eps <= 0.0) eps = 1e-6 * std::max(1.0, base_norm);

    JacobianResult out;
    out.matrix = SquareMatrix(N);

    for (std::size_t col = 0; col < N; ++col) {
        std::vector<double> plus = base, minus = base;
        plus[col] += eps;
        minus[col] -= eps;
        SectionPoint p_plus{lift_to_section(sys, plus, alpha, sol.psi), SectionPlane::Alpha};
        SectionPoint p_minus{lift_to_section(sys, minus, alpha, sol.psi), SectionPlane::Alpha};
        const FullMapResult f_plus = map_P(sys, p_plus, alpha, beta);
        const FullMapResult f_minus = map_P(sys, p_minus, alpha, beta);

        // A grazing contact nearby makes the first-hit time jump at finite
        // size under an O(eps) perturbation.
        if (std::abs(f_plus.t1 - f_minus.t1) > 0.05 * sol.s ||
            std::abs(f_plus.t1 - sol.s) > 0.1 * sol.s ||
            std::abs(f_minus.t1 - sol.s) > 0.1 * sol.s) {
            out.differentiable = false;
            out.suspect_columns.push_back(col);
        }
        for (std::size_t row = 0; row < N; ++row) {
            const double d =
                (f_plus.point.v.values[J[row]] - f_minus.point.v.values[J[row]]) / (2.0 * eps);
            out.matrix.at(row, col) = d;
        }
    }
    return out;
}

struct RateMeasurement {
    double factor = 0.0;            // fitted per-period contraction/growth
    double initial_distance = 0.0;
    std::vector<double> distances;  // weighted-norm section distances per period
    std::uint64_t seed = 0;
    bool diverged_while_stable = false;
    std::size_t fit_begin = 0;
    std::size_t fit_end = 0;        // one past the last sample used in the fit
};

/// Iterates the return map from a randomly perturbed start (perturbation
/// split across guiding and guided parts, renormalized to delta0 in the
/// weighted norm) and fits the per-period decay of the section distance by
/// least squares on the log, discarding the first two periods as transient.
inline RateMeasurement measure_rate(const SpectralSystem& sys, const PeriodicSolution& sol,
                                    double delta0, std::size_t n_periods,
                                    std::uint64_t seed = 20240601u) {
    if (!sol.valid)
        throw NumericError(NumericError::Kind::HypothesisViolated,
                           "measure_rate: solution is not valid");
    const double alpha = mean_temperature(sys, sol.psi);
    const double beta = alpha + sol.F_value;
    const std::vector<std::size_t> J = sys.sensor_indices();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    ModeVector start = sol.psi;
    for (std::size_t j = 1; j < sys.n_modes(); ++j) start.values[j] += gauss(rng);
    std::vector<double> j_coords(J.size());
    for (std::size_t k = 0; k < J.size(); ++k) j_coords[k] = start.values[J[k]];
    start = lift_to_section(sys, j_coords, alpha, start);
    std::vector<double> diff(sys.n_modes());
    for (std::size_t j = 0; j < sys.n_modes(); ++j) diff[j] = start.values[j] - sol.psi.values[j];
    const double norm = weighted_norm(sys.lambdas, diff);
    for (std::size_t j = 1; j < sys.n_modes(); ++j)
        start.values[j] = sol.psi.values[j] + (start.values[j] - sol.psi.values[j]) * delta0 / norm;
    for (std::size_t k = 0; k < J.size(); ++k) j_coords[k] = start.values[J[k]];
    start = lift_to_section(sys, j_coords, alpha, start);

    RateMeasurement out;
    out.seed = seed;
    SectionPoint p{start, SectionPlane::Alpha};
    auto distance_to_psi = [&](const ModeVector& v) {
        for (std::size_t j = 0; j < sys.n_modes(); ++j) diff[j] = v.values[j] - sol.psi.values[j];
        return weighted_norm(sys.lambdas, diff);
    };
    out.initial_distance = distance_to_psi(p.v);
    out.distances.push_back(out.initial_distance);
    for (std::size_t i = 0; i < n_periods; ++i) {
        const FullMapResult f = map_P(sys, p, alpha, beta);
        p = f.point;
        p.v.time = 0.0;
        out.distances.push_back(distance_to_psi(p.v));
    }

    // Least squares on log distances: skip the transient, stop once the
    // distance falls into the event-location noise floor or grows out of the
    // linear regime.
    const double scale = std::max(1.0, weighted_norm(sys.lambdas, sol.psi.values));
    const double noise_floor = 10.0 * kEventTol * scale;
    const double linear_cap = std::max(1e4 * delta0, 1e-4 * scale);
    const std::size_t skip = std::min<std::size_t>(2, out.distances.size() - 2);
    out.fit_begin = skip;
    std::size_t end = skip;
    while (end < out.distances.size() && out.distances[end] > noise_floor &&
           out.distances[end] < linear_cap)
        ++end;
    out.fit_end = end;

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t count = 0;
    for (std::size_t i = skip; i < end; ++i) {
        const double x = static_cast<double>(i);
        const double y = std::log(out.distances[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count >= 2) {
        const double denom = static_cast<double>(count) * sxx - sx * sx;
        const double slope = (static_cast<double>(count) * sxy - sx * sy) / denom;
        out.factor = std::exp(slope);
    }
    return out;
}

}  // namespace thermorelay
