#pragma once

// Truncated spectral model of the boundary-controlled heat problem:
// eigenvalues lambda_j, sensor coefficients m_j, and actuator coefficients
// K_j, together with the index split into the guiding part ({0} u J, the
// modes that feed the mean temperature) and the guided part (J0, modes with
// m_j = 0 that are driven but never feed back).

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "thermorelay/common.hpp"

namespace thermorelay {

struct SpectralSystem {
    std::vector<double> lambdas;  // 0 = lambda_0 < lambda_1 <= ... (nondecreasing)
    std::vector<double> m_coeffs;
    std::vector<double> k_coeffs;
    std::vector<std::size_t> guiding_indices;  // {0} u J, J = { j >= 1 : m_j != 0 }
    std::vector<std::size_t> guided_indices;   // J0 = { j >= 1 : m_j == 0 }

    std::size_t n_modes() const { return lambdas.size(); }

    /// Guiding indices excluding mode 0 (the set J), in ascending order.
    std::vector<std::size_t> sensor_indices() const {
        std::vector<std::size_t> out(guiding_indices.begin() + 1, guiding_indices.end());
        return out;
    }

    double m0() const { return m_coeffs[0]; }
    double k0() const { return k_coeffs[0]; }

    /// Sum m_j K_j over all modes (the transversality constant M).
    double coupling_sum() const {
        double acc = 0.0;
        for (std::size_t j = 0; j < n_modes(); ++j) acc += m_coeffs[j] * k_coeffs[j];
        return acc;
    }

    /// Smallest guided eigenvalue (contraction rate of the guided part);
    /// +inf when J0 is empty.
    double kappa() const {
        double k = std::numeric_limits<double>::infinity();
        for (std::size_t j : guided_indices) k = std::min(k, lambdas[j]);
        return k;
    }
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;
    double M = 0.0;      // sum m_j K_j
    double kappa = 0.0;  // min guided eigenvalue, +inf if none
    double sensor_h1_weight = 0.0;  // sum (1+lambda_j) m_j^2, recorded but not thresholded
};

namespace detail {

inline void partition_indices(SpectralSystem& sys) {
    sys.guiding_indices.clear();
    sys.guided_indices.clear();
    sys.guiding_indices.push_back(0);
    for (std::size_t j = 1; j < sys.n_modes(); ++j) {
        // Membership in J is an exact zero test: coefficients are explicit
        // configuration, not computed values.
        if (sys.m_coeffs[j] != 0.0)
            sys.guiding_indices.push_back(j);
        else
            sys.guided_indices.push_back(j);
    }
}

}  // namespace detail

/// Assembles a system from explicit coefficient lists. Only structural
/// requirements are enforced here (equal nonempty lengths); semantic
/// invariants are reported by validate().
inline SpectralSystem make_system(std::vector<double> lambdas, std::vector<double> m_coeffs,
                                  std::vector<double> k_coeffs) {
    if (lambdas.empty()) throw ConfigError("make_system: empty spectrum");
    if (m_coeffs.size() != lambdas.size() || k_coeffs.size() != lambdas.size())
        throw ConfigError("make_system: lambdas, m, k must have equal lengths");
    SpectralSystem sys;
    sys.lambdas = std::move(lambdas);
    sys.m_coeffs = std::move(m_coeffs);
    sys.k_coeffs = std::move(k_coeffs);
    detail::partition_indices(sys);
    return sys;
}

/// Analytic 1-D rod model: insulated at one end, actuated at the other.
/// lambda_j = j^2, K_0 = 1/sqrt(pi), K_j = (-1)^j sqrt(2/pi). Sensor
/// coefficients come from m_overrides (index -> value); all others are zero.
inline SpectralSystem build_rod_model(std::size_t n_modes,
                                      const std::map<std::size_t, double>& m_overrides) {
    if (n_modes < 1) throw ConfigError("build_rod_model: n_modes must be >= 1");
    for (const auto& [idx, val] : m_overrides) {
        if (idx >= n_modes)
            throw ConfigError("build_rod_model: m override index " + std::to_string(idx) +
                              " exceeds n_modes");
        (void)val;
    }
    auto it0 = m_overrides.find(0);
    if (it0 == m_overrides.end() || it0->second <= 0.0)
        throw ConfigError("build_rod_model: m_0 must be present and positive");

    const double k0 = 1.0 / std::sqrt(std::numbers::pi);
    const double kj_mag = std::sqrt(2.0 / std::numbers::pi);

    SpectralSystem sys;
    sys.lambdas.resize(n_modes);
    sys.m_coeffs.assign(n_modes, 0.0);
    sys.k_coeffs.resize(n_modes);
    sys.lambdas[0] = 0.0;
    sys.k_coeffs[0] = k0;
    for (std::size_t j = 1; j < n_modes; ++j) {
        sys.lambdas[j] = static_cast<double>(j) * static_cast<double>(j);
        sys.k_coeffs[j] = (j % 2 == 0) ? kj_mag : -kj_mag;
    }
    for (const auto& [idx, val] : m_overrides) sys.m_coeffs[idx] = val;
    detail::partition_indices(sys);
    return sys;
}

/// Report-only invariant check; never throws.
inline ValidationReport validate(const SpectralSystem& sys) {
    ValidationReport rep;
    auto flag = [&rep](const std::string& v) {
        rep.ok = false;
        rep.violations.push_back(v);
    };

    const std::size_t n = sys.n_modes();
    if (n == 0) {
        flag("empty_system");
        rep.kappa = std::numeric_limits<double>::infinity();
        return rep;
    }
    if (sys.m_coeffs.size() != n || sys.k_coeffs.size() != n) flag("length_mismatch");

    if (sys.lambdas[0] != 0.0) flag("lambda0_nonzero");
    for (std::size_t j = 1; j < n; ++j) {
        if (!(sys.lambdas[j] > 0.0)) flag("lambda_nonpositive_at_" + std::to_string(j));
        if (sys.lambdas[j] < sys.lambdas[j - 1]) flag("lambda_decreasing_at_" + std::to_string(j));
    }
    if (!(sys.m0() > 0.0)) flag("m0_nonpositive");
    if (!(sys.k0() > 0.0)) flag("k0_nonpositive");

    double weighted_m = 0.0, k_weight = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        weighted_m += (1.0 + sys.lambdas[j]) * sys.m_coeffs[j] * sys.m_coeffs[j];
        if (j >= 1 && sys.lambdas[j] > 0.0) {
            const double k2 = sys.k_coeffs[j] * sys.k_coeffs[j];
            k_weight += k2 / (sys.lambdas[j] * sys.lambdas[j]) + k2 / sys.lambdas[j];
        }
    }
    if (!std::isfinite(weighted_m)) flag("sensor_weight_not_finite");
    if (!std::isfinite(k_weight)) flag("actuator_weight_not_finite");

    // Partition consistency (exact zero membership test).
    std::vector<bool> seen(n, false);
    for (std::size_t j : sys.guiding_indices) {
        if (j >= n || seen[j]) flag("partition_inconsistent");
        else seen[j] = true;
        if (j >= 1 && j < n && sys.m_coeffs[j] == 0.0) flag("guiding_index_without_sensor");
    }
    for (std::size_t j : sys.guided_indices) {
        if (j >= n || seen[j]) flag("partition_inconsistent");
        else seen[j] = true;
        if (j < n && sys.m_coeffs[j] != 0.0) flag("guided_index_with_sensor");
    }
    for (std::size_t j = 0; j < n; ++j)
        if (!seen[j]) {
            flag("partition_incomplete");
            break;
        }

    rep.M = sys.coupling_sum();
    rep.kappa = sys.kappa();
    rep.sensor_h1_weight = weighted_m;
    if (!std::isfinite(rep.M)) flag("coupling_sum_not_finite");
    return rep;
}

}  // namespace thermorelay
