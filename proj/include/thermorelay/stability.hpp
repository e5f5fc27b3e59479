#pragma once

// Linearization of the half-period guiding return map at a symmetric
// periodic orbit. With E_j = 1 - e^{-lambda_j s}, Q_j = 2 e^{-lambda_j s} /
// (1 + e^{-lambda_j s}), Q = m0 K0 + sum_J m_j K_j Q_j, S_j = K_j Q_j / Q and
// sigma_j = m_j E_j, the matrix over the sensor modes J is
//
//   A[i][j] = delta_ij (1 - E_i) + S_i sigma_j ,       A(0) = I.
//
// The full-period derivative is A^2; eigenvalues of A decide stability. The
// eigenvalue product obeys prod(mu_i - 1) = (-1)^N (m0 K0 / Q) prod E_i,
// which is checked against an independent determinant evaluation.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "thermorelay/characteristic.hpp"
#include "thermorelay/common.hpp"
#include "thermorelay/dynamics.hpp"
#include "thermorelay/eigen.hpp"
#include "thermorelay/spectral_system.hpp"

namespace thermorelay {

struct QFunctions {
    std::vector<double> q_j;  // over sensor indices J, ascending
    double q = 0.0;           // mean-temperature rate at the switching moment
};

inline QFunctions q_functions(const SpectralSystem& sys, double s) {
    if (!(s > 0.0)) throw ConfigError("q_functions: s must be positive");
    QFunctions out;
    out.q = sys.m0() * sys.k0();
    for (std::size_t j : sys.guiding_indices) {
        if (j == 0) continue;
        const double u = std::exp(-sys.lambdas[j] * s);
        const double qj = 2.0 * u / (1.0 + u);
        out.q_j.push_back(qj);
        out.q += sys.m_coeffs[j] * sys.k_coeffs[j] * qj;
    }
    return out;
}

/// Linearization matrix A(s) over the sensor modes J (N = |J| >= 1).
inline SquareMatrix matrix_A(const SpectralSystem& sys, double s) {
    const std::vector<std::size_t> J = sys.sensor_indices();
    const std::size_t N = J.size();
    if (N == 0) throw ConfigError("matrix_A: system has no sensor modes (N = 0)");
    const QFunctions qf = q_functions(sys, s);
    const double q_scale = std::abs(sys.m0() * sys.k0());
    if (std::abs(qf.q) < 1e-14 * std::max(1.0, q_scale))
        throw NumericError(NumericError::Kind::DegenerateLinearization,
                           "matrix_A: Q(s) vanishes, linearization undefined");

    SquareMatrix a(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double e_i = 1.0 - std::exp(-sys.lambdas[J[i]] * s);
        const double s_i = sys.k_coeffs[J[i]] * qf.q_j[i] / qf.q;
        for (std::size_t j = 0; j < N; ++j) {
            const double sigma_j = sys.m_coeffs[J[j]] * (1.0 - std::exp(-sys.lambdas[J[j]] * s));
            a.at(i, j) = s_i * sigma_j;
        }
        a.at(i, i) += 1.0 - e_i;
    }
    return a;
}

/// Relative residual of the eigenvalue product identity
/// |prod(mu_i - 1) - (-1)^N (m0 K0 / Q) prod E_i| / max(|lhs|, |rhs|).
/// The left side is evaluated through the eigenvalues of A - I (no
/// subtraction cancellation), the right side in closed form.
inline double det_identity_check(const SpectralSystem& sys, double s) {
    const std::vector<std::size_t> J = sys.sensor_indices();
    const std::size_t N = J.size();
    if (N == 0) return 0.0;
    const QFunctions qf = q_functions(sys, s);
    if (qf.q == 0.0)
        throw NumericError(NumericError::Kind::DegenerateLinearization,
                           "det_identity_check: Q(s) = 0");

    SquareMatrix b = matrix_A(sys, s);
    for (std::size_t i = 0; i < N; ++i) b.at(i, i) -= 1.0;
    const EigenSolution es = eigensolve(b);
    std::complex<double> lhs(1.0, 0.0);
    for (const auto& nu : es.values) lhs *= nu;

    double rhs = sys.m0() * sys.k0() / qf.q;
    if (N % 2 == 1) rhs = -rhs;
    for (std::size_t i = 0; i < N; ++i) rhs *= 1.0 - std::exp(-sys.lambdas[J[i]] * s);

    const double denom = std::max({std::abs(lhs), std::abs(rhs),
                                   std::numeric_limits<double>::min()});
    return std::abs(lhs - std::complex<double>(rhs, 0.0)) / denom;
}

enum class StabilityClass { Stable, Unstable, Saddle, Marginal };

inline std::string to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::Stable: return "stable";
        case StabilityClass::Unstable: return "unstable";
        case StabilityClass::Saddle: return "saddle";
        case StabilityClass::Marginal: return "marginal";
    }
    return "unknown";
}

struct StabilityReport {
    double s = 0.0;
    double Q = 0.0;
    SquareMatrix A;                         // N x N, N = |J| (empty when N = 0)
    std::vector<std::complex<double>> mus;  // eigenvalues of A
    StabilityClass classification = StabilityClass::Stable;
    double det_identity_residual = 0.0;
    double max_abs_mu = 0.0;
    double min_abs_mu = 0.0;
};

/// Stability of a valid periodic solution through the eigenvalues of A(s).
/// Requires Q(s) > 0 (transversal switching). Q is recomputed from the
/// simulated switching rate and cross-checked against the closed form.
inline StabilityReport classify(const SpectralSystem& sys, const PeriodicSolution& sol,
                                double tol = kClassifyTol) {
    if (!sol.valid)
        throw NumericError(NumericError::Kind::HypothesisViolated,
                           "classify: solution is not valid");
    const QFunctions qf = q_functions(sys, sol.s);
    if (!(qf.q > 0.0))
        throw NumericError(NumericError::Kind::HypothesisViolated,
                           "classify: Q(s) <= 0, transversality hypothesis fails");

    // Independent route to Q: the mean-temperature rate at the switching
    // point of the simulated trajectory.
    const ModeVector at_s = advance_modes(sys, sol.psi, +1, sol.s);
    const double rate = mean_rate(sys, at_s, +1);
    if (std::abs(rate - qf.q) > 1e-8 * std::max(1.0, std::abs(qf.q)))
        throw NumericError(NumericError::Kind::InternalInconsistency,
                           "classify: closed-form Q and simulated switching rate disagree");

    StabilityReport rep;
    rep.s = sol.s;
    rep.Q = qf.q;

    const std::size_t N = sys.sensor_indices().size();
    if (N == 0) {
        // Single guiding mode v0: the return map is rigid, every orbit stable.
        rep.classification = StabilityClass::Stable;
        return rep;
    }

    rep.A = matrix_A(sys, sol.s);
    const EigenSolution es = eigensolve(rep.A);
    rep.mus = es.values;
    rep.det_identity_residual = det_identity_check(sys, sol.s);

    double max_mu = 0.0, min_mu = std::numeric_limits<double>::infinity();
    for (const auto& mu : rep.mus) {
        max_mu = std::max(max_mu, std::abs(mu));
        min_mu = std::min(min_mu, std::abs(mu));
    }
    rep.max_abs_mu = max_mu;
    rep.min_abs_mu = min_mu;

    if (max_mu < 1.0 - tol)
        rep.classification = StabilityClass::Stable;
    else if (max_mu > 1.0 + tol)
        rep.classification =
            (min_mu < 1.0 - tol) ? StabilityClass::Saddle : StabilityClass::Unstable;
    else
        rep.classification = StabilityClass::Marginal;
    return rep;
}

enum class SmallSPrediction { PredictsStable, PredictsUnstable, Indeterminate };

struct SmallSCriteria {
    SmallSPrediction prediction = SmallSPrediction::Indeterminate;
    double M = 0.0;      // coupling sum, must be positive for the criterion
    double L_sum = 0.0;  // sum over J of (M - m_j K_j) lambda_j
    double L = 0.0;      // L_sum / M
    double J2 = 0.0;     // lambda_1 lambda_2 m0 K0 / M (N = 2 only, else 0)
};

/// Small-half-period stability prediction from the trace expansion of A:
/// negative L_sum forces an expanding eigenvalue; positive L_sum proves
/// stability for N <= 2. For N >= 3 a positive sum is inconclusive.
inline SmallSCriteria small_s_criteria(const SpectralSystem& sys) {
    SmallSCriteria out;
    out.M = sys.coupling_sum();
    if (!(out.M > 0.0)) {
        out.prediction = SmallSPrediction::Indeterminate;
        return out;
    }
    const std::vector<std::size_t> J = sys.sensor_indices();
    for (std::size_t j : J)
        out.L_sum += (out.M - sys.m_coeffs[j] * sys.k_coeffs[j]) * sys.lambdas[j];
    out.L = out.L_sum / out.M;
    if (J.size() == 2)
        out.J2 = sys.lambdas[J[0]] * sys.lambdas[J[1]] * sys.m0() * sys.k0() / out.M;

    if (J.size() <= 1) {
        out.prediction = SmallSPrediction::PredictsStable;
    } else if (out.L_sum < 0.0) {
        out.prediction = SmallSPrediction::PredictsUnstable;
    } else if (J.size() == 2) {
        out.prediction = SmallSPrediction::PredictsStable;
    } else {
        out.prediction = SmallSPrediction::Indeterminate;
    }
    return out;
}

}  // namespace thermorelay
