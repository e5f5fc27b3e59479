#pragma once

// Closed-form construction and enumeration of symmetric two-switching
// periodic orbits via the first and second characteristic functions:
//
//   F(s)   = m0 K0 s + 2 sum_J m_j (Kj/lambda_j) (1-e^{-lambda_j s})/(1+e^{-lambda_j s})
//   H(t,s) = m0 K0 (t-s) + 2 sum_J m_j (Kj/lambda_j) (e^{-lambda_j s}-e^{-lambda_j t})/(1+e^{-lambda_j s})
//
// Roots s of F(s) = beta - alpha are half-period candidates; a candidate is a
// genuine periodic orbit iff H(., s) < 0 on (0, s). H(0,s) = -F(s) and
// H(s,s) = 0 hold identically (and bit-exactly the way the terms are formed).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "thermorelay/common.hpp"
#include "thermorelay/dynamics.hpp"
#include "thermorelay/spectral_system.hpp"

namespace thermorelay {

/// First characteristic function F(s); F(0) = 0.
inline double char_F(const SpectralSystem& sys, double s) {
    double acc = sys.m0() * sys.k0() * s;
    for (std::size_t j : sys.guiding_indices) {
        if (j == 0) continue;
        const double u = std::exp(-sys.lambdas[j] * s);
        acc += 2.0 * sys.m_coeffs[j] * (sys.k_coeffs[j] / sys.lambdas[j]) * (1.0 - u) / (1.0 + u);
    }
    return acc;
}

/// Termwise derivative F'(s); F'(0) equals the coupling sum M.
inline double char_F_prime(const SpectralSystem& sys, double s) {
    double acc = sys.m0() * sys.k0();
    for (std::size_t j : sys.guiding_indices) {
        if (j == 0) continue;
        const double u = std::exp(-sys.lambdas[j] * s);
        acc += 4.0 * sys.m_coeffs[j] * sys.k_coeffs[j] * u / ((1.0 + u) * (1.0 + u));
    }
    return acc;
}

/// Second characteristic function H(t, s) on 0 <= t <= s.
inline double char_H(const SpectralSystem& sys, double t, double s) {
    double acc = sys.m0() * sys.k0() * (t - s);
    for (std::size_t j : sys.guiding_indices) {
        if (j == 0) continue;
        const double us = std::exp(-sys.lambdas[j] * s);
        const double ut = std::exp(-sys.lambdas[j] * t);
        acc += 2.0 * sys.m_coeffs[j] * (sys.k_coeffs[j] / sys.lambdas[j]) * (us - ut) / (1.0 + us);
    }
    return acc;
}

/// dH/dt; at t = s this equals the switching rate Q(s).
inline double char_H_t(const SpectralSystem& sys, double t, double s) {
    double acc = sys.m0() * sys.k0();
    for (std::size_t j : sys.guiding_indices) {
        if (j == 0) continue;
        const double us = std::exp(-sys.lambdas[j] * s);
        const double ut = std::exp(-sys.lambdas[j] * t);
        acc += 2.0 * sys.m_coeffs[j] * sys.k_coeffs[j] * ut / (1.0 + us);
    }
    return acc;
}

/// Initial data of the symmetric candidate with half-period s on the plane
/// mean = alpha: psi_j = -(Kj/lambda_j)(1-e^{-lambda_j s})/(1+e^{-lambda_j s})
/// for every j >= 1 (guided modes take the unique periodic completion, which
/// is the same formula), and psi_0 balances the mean to alpha.
inline ModeVector symmetric_initial(const SpectralSystem& sys, double alpha, double s) {
    ModeVector psi;
    psi.values.assign(sys.n_modes(), 0.0);
    psi.time = 0.0;
    for (std::size_t j = 1; j < sys.n_modes(); ++j) {
        const double u = std::exp(-sys.lambdas[j] * s);
        psi.values[j] = -(sys.k_coeffs[j] / sys.lambdas[j]) * (1.0 - u) / (1.0 + u);
    }
    double weighted = 0.0;
    for (std::size_t j : sys.guiding_indices) {
        if (j == 0) continue;
        weighted += sys.m_coeffs[j] * psi.values[j];
    }
    psi.values[0] = (alpha - weighted) / sys.m0();
    return psi;
}

/// Half-period s beyond which F is certainly strictly increasing (termwise
/// bound on the oscillatory part of F').
inline double char_F_monotone_beyond(const SpectralSystem& sys) {
    double coupling = 0.0;
    double lambda_min = 0.0;
    for (std::size_t j : sys.guiding_indices) {
        if (j == 0) continue;
        coupling += std::abs(sys.m_coeffs[j] * sys.k_coeffs[j]);
        lambda_min = (lambda_min == 0.0) ? sys.lambdas[j] : std::min(lambda_min, sys.lambdas[j]);
    }
    if (coupling == 0.0) return 0.0;
    const double ratio = 4.0 * coupling / (sys.m0() * sys.k0());
    if (ratio <= 1.0) return 0.0;
    return std::log(ratio) / lambda_min;
}

struct FRoot {
    double s;
    double F_prime;
};

struct FRootList {
    std::vector<FRoot> roots;
    bool may_have_root_beyond = false;  // F(s_max) still below the gap
    std::string warning;
};

namespace detail {

inline double bisect_to(const SpectralSystem& sys, double gap, double lo, double hi, double tol) {
    double flo = char_F(sys, lo) - gap;
    for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = char_F(sys, mid) - gap;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// All solutions of F(s) = gap in (0, s_max], each refined to 1e-12, with
/// F'(root) attached. Every scan cell containing an extremum of F (a sign
/// flip of F') is split at the extremum, so a root pair close to a fold is
/// caught no matter how near the gap sits to the fold value; an exact fold
/// tangency is reported as a single (double) root.
inline FRootList find_F_roots(const SpectralSystem& sys, double gap, double s_max) {
    if (!(gap > 0.0)) throw ConfigError("find_F_roots: gap must be positive");
    if (!(s_max > 0.0)) throw ConfigError("find_F_roots: s_max must be positive");

    FRootList out;
    double step = std::min(gap / (8.0 * sys.m0() * sys.k0()), 1e-3 * s_max);
    step = std::max(step, s_max / 2e6);  // scan budget floor

    auto emit = [&](double root) {
        for (const FRoot& r : out.roots)
            if (std::abs(r.s - root) < 10.0 * kRootTol) return;
        out.roots.push_back({root, char_F_prime(sys, root)});
    };

    auto locate_extremum = [&](double lo, double hi) {
        double dlo = char_F_prime(sys, lo);
        for (int it = 0; it < 200 && (hi - lo) > kRootTol; ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((char_F_prime(sys, mid) < 0.0) == (dlo < 0.0)) {
                lo = mid;
                dlo = char_F_prime(sys, lo);
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    double prev = 0.0, fprev = -gap, dprev = char_F_prime(sys, 0.0);  // F(0) = 0 < gap
    while (prev < s_max) {
        const double next = std::min(prev + step, s_max);
        const double fnext = char_F(sys, next) - gap;
        const double dnext = char_F_prime(sys, next);
        if ((fprev < 0.0) != (fnext < 0.0)) {
            emit(detail::bisect_to(sys, gap, prev, next, kRootTol));
        } else if ((dprev < 0.0) != (dnext < 0.0)) {
            const double sx = locate_extremum(prev, next);
            const double fx = char_F(sys, sx) - gap;
            if (std::abs(fx) <= 1e-12 * std::max(1.0, gap)) {
                emit(sx);  // fold tangency at evaluation noise: double root
            } else if ((fx < 0.0) != (fprev < 0.0)) {
                // The extremum pokes through the level: a root on each side.
                emit(detail::bisect_to(sys, gap, prev, sx, kRootTol));
                emit(detail::bisect_to(sys, gap, sx, next, kRootTol));
            }
        }
        prev = next;
        fprev = fnext;
        dprev = dnext;
    }

    std::sort(out.roots.begin(), out.roots.end(),
              [](const FRoot& a, const FRoot& b) { return a.s < b.s; });
    if (char_F(sys, s_max) < gap) {
        out.may_have_root_beyond = true;
        out.warning = "F(s_max) < gap: the guaranteed large-s root lies beyond s_max";
    }
    return out;
}

struct CrossingCheck {
    bool valid = false;        // no root of H(., s) in the open interval (0, s)
    double margin = 0.0;       // largest H value seen strictly inside (0, s)
    std::vector<double> tau;   // interior roots, ascending
    std::vector<bool> tangential;  // per root: |H| touch without sign change
};

/// Scans H(., s) on (0, s) for interior roots. Grid of 512 uniform points
/// plus a log-spaced prefix (fast modes act near t = 0), every extremum
/// refined through dH/dt; a touch with |H| < 1e-10 at an interior maximum
/// counts as a tangential root.
inline CrossingCheck first_crossing_check(const SpectralSystem& sys, double s) {
    CrossingCheck out;
    if (!(s > 0.0)) throw ConfigError("first_crossing_check: s must be positive");

    std::vector<double> grid;
    grid.reserve(512 + 64);
    for (int i = 1; i < 512; ++i) grid.push_back(s * i / 512.0);
    double lambda_max = 0.0;  // fastest sensor-fed mode; H never sees the rest
    for (std::size_t j : sys.guiding_indices) lambda_max = std::max(lambda_max, sys.lambdas[j]);
    if (lambda_max > 0.0 && 1.0 / lambda_max < s / 512.0) {
        double t = std::min(1e-8 * s, 0.1 / lambda_max);
        while (t < s / 512.0) {
            grid.push_back(t);
            t *= 1.6;
        }
        std::sort(grid.begin(), grid.end());
    }

    const double touch_tol = 1e-10;
    auto H = [&](double t) { return char_H(sys, t, s); };
    auto Ht = [&](double t) { return char_H_t(sys, t, s); };

    auto refine_root = [&](double lo, double hi) {
        double flo = H(lo);
        for (int it = 0; it < 200 && (hi - lo) > kRootTol * s; ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((H(mid) < 0.0) == (flo < 0.0)) {
                lo = mid;
                flo = H(lo);
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };
    auto refine_extremum = [&](double lo, double hi) {
        double dlo = Ht(lo);
        for (int it = 0; it < 200 && (hi - lo) > kRootTol * s; ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((Ht(mid) < 0.0) == (dlo < 0.0)) {
                lo = mid;
                dlo = Ht(lo);
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    double margin = -std::numeric_limits<double>::infinity();
    double t_prev = grid.front();
    double h_prev = H(t_prev), d_prev = Ht(t_prev);
    margin = std::max(margin, h_prev);

    auto add_root = [&](double t, bool tang) {
        for (double existing : out.tau)
            if (std::abs(existing - t) < 100.0 * kRootTol * s) return;
        out.tau.push_back(t);
        out.tangential.push_back(tang);
    };
    if (h_prev >= 0.0) add_root(t_prev, false);

    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double t = grid[i];
        const double h = H(t), d = Ht(t);
        margin = std::max(margin, h);
        if ((h_prev < 0.0) != (h < 0.0)) add_root(refine_root(t_prev, t), false);
        if (d_prev > 0.0 && d < 0.0) {
            const double tx = refine_extremum(t_prev, t);
            const double hx = H(tx);
            margin = std::max(margin, hx);
            if (hx > 0.0 && h_prev < 0.0 && h < 0.0) {
                // Pair of crossings hidden between grid nodes.
                add_root(refine_root(t_prev, tx), false);
                add_root(refine_root(tx, t), false);
            } else if (std::abs(hx) < touch_tol && h_prev < 0.0 && h < 0.0) {
                add_root(tx, true);
            }
        }
        t_prev = t;
        h_prev = h;
        d_prev = d;
    }

    std::sort(out.tau.begin(), out.tau.end());
    out.margin = margin;
    out.valid = out.tau.empty();
    return out;
}

struct PeriodicSolution {
    double s = 0.0;            // half-period; full period T = 2s
    ModeVector psi;            // initial data on the plane mean = alpha
    bool valid = false;        // no premature switching on (0, s)
    double F_value = 0.0;      // F(s), equals the threshold gap at a root
    double min_H_margin = 0.0; // max of H(., s) strictly inside (0, s)
    bool grazing = false;      // tangential contact at the endpoint or interior
    double F_prime = 0.0;
    int root_index = -1;       // position among the F-roots, ascending in s
};

/// Builds every symmetric candidate for the given thresholds: one per root of
/// F(s) = beta - alpha in (0, s_max], validity decided by the interior scan
/// of H. Invalid candidates ("ghosts") are returned with valid = false.
/// Root-finder warnings (e.g. s_max below the guaranteed large root) are
/// passed through `warning` when provided.
inline std::vector<PeriodicSolution> enumerate_periodic(const SpectralSystem& sys, double alpha,
                                                        double beta, double s_max,
                                                        std::string* warning = nullptr) {
    if (!(beta > alpha)) throw ConfigError("enumerate_periodic: requires beta > alpha");
    const FRootList roots = find_F_roots(sys, beta - alpha, s_max);
    if (warning) *warning = roots.warning;

    std::vector<PeriodicSolution> out;
    out.reserve(roots.roots.size());
    int idx = 0;
    for (const FRoot& r : roots.roots) {
        PeriodicSolution sol;
        sol.s = r.s;
        sol.F_prime = r.F_prime;
        sol.root_index = idx++;
        sol.F_value = char_F(sys, r.s);
        sol.psi = symmetric_initial(sys, alpha, r.s);
        const CrossingCheck check = first_crossing_check(sys, r.s);
        sol.valid = check.valid;
        sol.min_H_margin = check.margin;
        const bool endpoint_tangent = std::abs(char_H_t(sys, r.s, r.s)) < kBifurcationTol;
        bool interior_tangent = false;
        for (bool t : check.tangential) interior_tangent |= t;
        sol.grazing = endpoint_tangent || interior_tangent;
        out.push_back(std::move(sol));
    }
    return out;
}

struct SimulationCheck {
    bool ok = true;
    double first_switch_time = 0.0;
    double first_switch_err = 0.0;
    double second_switch_err = 0.0;
    double return_err = 0.0;      // weighted-norm distance terminal vs psi
    double reflection_err = 0.0;  // max_j |z_j(s) + psi_j|, j >= 1
    std::string message;
};

/// End-to-end consistency of a constructed solution against direct
/// simulation over one full period: switchings at s and 2s, reflection
/// z_j(s) = -psi_j, and return to psi in the weighted norm.
inline SimulationCheck verify_by_simulation(const SpectralSystem& sys, const PeriodicSolution& sol,
                                            double tol) {
    SimulationCheck rep;
    const double alpha = mean_temperature(sys, sol.psi);
    const double beta = alpha + sol.F_value;
    const double s = sol.s;

    Trajectory traj = simulate(sys, sol.psi, alpha, beta, 2.0 * s * (1.0 + 1e-9));
    if (traj.switch_times.empty()) {
        rep.ok = false;
        rep.message = "no switching on the period";
        return rep;
    }
    rep.first_switch_time = traj.switch_times[0];
    rep.first_switch_err = std::abs(traj.switch_times[0] - s);
    if (rep.first_switch_err > tol * std::max(1.0, s)) {
        rep.ok = false;
        rep.message = "first switching off the half-period";
    }
    if (traj.switch_times.size() < 2) {
        rep.ok = false;
        if (rep.message.empty()) rep.message = "second switching missing";
    } else {
        rep.second_switch_err = std::abs(traj.switch_times[1] - 2.0 * s);
        if (rep.second_switch_err > tol * std::max(1.0, s)) {
            rep.ok = false;
            if (rep.message.empty()) rep.message = "second switching off the period";
        }
    }

    const ModeVector at_s = advance_modes(sys, sol.psi, +1, s);
    for (std::size_t j = 1; j < sys.n_modes(); ++j)
        rep.reflection_err = std::max(rep.reflection_err,
                                      std::abs(at_s.values[j] + sol.psi.values[j]));
    if (rep.reflection_err > tol) {
        rep.ok = false;
        if (rep.message.empty()) rep.message = "reflection symmetry violated at s";
    }

    // Compare the state at the second switching (one exact period) with psi.
    std::vector<double> diff(sys.n_modes());
    ModeVector z_T = traj.terminal;
    if (traj.switch_times.size() >= 2) {
        const TrajectorySegment& seg = traj.segments[1];
        z_T = advance_modes(sys, seg.start, seg.relay_output, traj.switch_times[1] - seg.start_time);
    }
    for (std::size_t j = 0; j < sys.n_modes(); ++j)
        diff[j] = z_T.values[j] - sol.psi.values[j];
    rep.return_err = weighted_norm(sys.lambdas, diff);
    if (rep.return_err > tol) {
        rep.ok = false;
        if (rep.message.empty()) rep.message = "terminal state does not return to psi";
    }
    return rep;
}

}  // namespace thermorelay
