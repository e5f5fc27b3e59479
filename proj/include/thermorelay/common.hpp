#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace thermorelay {

inline constexpr const char* kVersion = "0.1.0";

/// Configuration / input errors (bad thresholds, malformed descriptors,
/// missing files). The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failures during computation. The CLI maps these to exit code 1.
class NumericError : public std::runtime_error {
public:
    enum class Kind {
        DetectionFailure,         // event bracketing exhausted
        ZenoSuspected,            // repeated sub-floor switching gaps
        NonConvergence,           // eigenvalue iteration did not converge
        DegenerateLinearization,  // Q(s) ~ 0, matrix A undefined
        HypothesisViolated,       // a required hypothesis (Q > 0, validity) fails
        InternalInconsistency     // two routes to the same quantity disagree
    };

    NumericError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}

    Kind kind;
};

// Default tolerances, fixed project-wide.
inline constexpr double kEventTol = 1e-12;       // absolute tolerance in time for event location
inline constexpr double kGrazeTol = 1e-8;        // |mean rate| below this at an event -> grazing
inline constexpr double kRootTol = 1e-12;        // characteristic-equation root refinement
inline constexpr double kClassifyTol = 1e-9;     // |mu| vs 1 classification margin
inline constexpr double kBifurcationTol = 1e-8;  // residual tolerance for S-set membership

/// Weighted l2 norm sqrt(sum (1+lambda_j) v_j^2) over the given index set.
inline double weighted_norm(std::span<const double> lambdas, std::span<const double> values,
                            std::span<const std::size_t> indices) {
    double acc = 0.0;
    for (std::size_t j : indices) acc += (1.0 + lambdas[j]) * values[j] * values[j];
    return std::sqrt(acc);
}

/// Weighted l2 norm over all components.
inline double weighted_norm(std::span<const double> lambdas, std::span<const double> values) {
    double acc = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j)
        acc += (1.0 + lambdas[j]) * values[j] * values[j];
    return std::sqrt(acc);
}

/// FNV-1a 64-bit hash; used to fingerprint configs in output files.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace detail {

/// Deterministic parallel map: fn(i) for i in [0, n); each index owns its
/// output slot, so results are identical to the serial order.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t hw = std::thread::hardware_concurrency();
    if (hw <= 1 || n < 32) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t n_threads = std::min<std::size_t>(hw, 8);
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += n_threads) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace detail

}  // namespace thermorelay
