#pragma once

// Classification of half-periods into the bifurcation sets
//
//   S0 = { F(s) = 0 }                        (thresholds coalesce)
//   S1 = { F > 0, tau(s) empty, H_t(s,s) = 0 }   (grazing, orbit exists)
//   S2 = { F > 0, tau(s) nonempty, H_t = 0 at every interior root }
//   S3 = { F > 0, F'(s) = 0 }                (fold of F-roots)
//
// and diagram generation over s. Candidate points come from sign changes of
// F, F', the endpoint rate Q(s) = H_t(s,s), and the interior grazing margin,
// each refined by bisection.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "thermorelay/characteristic.hpp"
#include "thermorelay/common.hpp"
#include "thermorelay/spectral_system.hpp"
#include "thermorelay/stability.hpp"

namespace thermorelay {

enum class BifurcationKind { S0, S1GrazeValid, S2GrazeInvalid, S3Fold };

inline std::string to_string(BifurcationKind k) {
    switch (k) {
        case BifurcationKind::S0: return "S0";
        case BifurcationKind::S1GrazeValid: return "S1_graze_valid";
        case BifurcationKind::S2GrazeInvalid: return "S2_graze_invalid";
        case BifurcationKind::S3Fold: return "S3_fold";
    }
    return "unknown";
}

struct BifurcationPoint {
    double s = 0.0;
    double gap = 0.0;  // F(s)
    BifurcationKind kind = BifurcationKind::S0;
    std::string detail;
};

/// Strict residual-based set membership at a single s. Interior roots within
/// 1e-5 s of the endpoint are treated as the endpoint tangency itself (they
/// are below the resolution at which S1 and S2 can be told apart).
inline std::optional<BifurcationPoint> classify_s(const SpectralSystem& sys, double s,
                                                  double tol = kBifurcationTol) {
    if (!(s > 0.0)) throw ConfigError("classify_s: s must be positive");
    const double F = char_F(sys, s);
    if (std::abs(F) <= tol) return BifurcationPoint{s, F, BifurcationKind::S0, "F(s) = 0"};
    if (F > 0.0) {
        const CrossingCheck check = first_crossing_check(sys, s);
        const double endpoint_window = 1e-5 * s;
        std::vector<double> interior;
        for (double t : check.tau)
            if (s - t > endpoint_window) interior.push_back(t);

        const double q = char_H_t(sys, s, s);
        if (interior.empty() && std::abs(q) <= tol)
            return BifurcationPoint{s, F, BifurcationKind::S1GrazeValid,
                                    "endpoint tangency, orbit exists"};
        if (!interior.empty()) {
            bool all_tangential = true;
            for (double t : interior)
                all_tangential = all_tangential && std::abs(char_H_t(sys, t, s)) <= tol;
            if (all_tangential) {
                std::ostringstream os;
                os << "interior tangency at t = " << interior.front();
                return BifurcationPoint{s, F, BifurcationKind::S2GrazeInvalid, os.str()};
            }
        }
        if (std::abs(char_F_prime(sys, s)) <= tol) {
            const bool ghost = !check.valid;
            return BifurcationPoint{s, F, BifurcationKind::S3Fold,
                                    ghost ? "fold on a ghost branch (tau nonempty)"
                                          : "fold of periodic orbits"};
        }
    }
    return std::nullopt;
}

struct DiagramRow {
    double s = 0.0;
    double F = 0.0;
    double F_prime = 0.0;
    bool valid = false;
    bool grazing = false;
};

struct Diagram {
    std::vector<DiagramRow> rows;
    std::vector<BifurcationPoint> points;
};

namespace detail {

inline double bisect_sign_change(const std::function<double(double)>& f, double lo, double hi,
                                 double rel_tol) {
    double flo = f(lo);
    for (int it = 0; it < 200 && (hi - lo) > rel_tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
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

/// Diagram rows on a log-uniform grid over [s_min, s_max] plus refined
/// bifurcation points. Interesting structure clusters near s = 0, hence the
/// log spacing.
inline Diagram scan_diagram(const SpectralSystem& sys, double s_min, double s_max,
                            std::size_t n_points) {
    if (!(0.0 < s_min && s_min < s_max)) throw ConfigError("scan_diagram: need 0 < s_min < s_max");
    if (n_points < 2) throw ConfigError("scan_diagram: need at least two grid points");

    Diagram diagram;
    diagram.rows.resize(n_points);
    const double log_lo = std::log(s_min), log_hi = std::log(s_max);

    struct RowAux {
        double q = 0.0;
        double margin = 0.0;
        bool has_margin = false;
    };
    std::vector<RowAux> aux(n_points);

    thermorelay::detail::parallel_for(n_points, [&](std::size_t i) {
        const double s = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) /
                                               static_cast<double>(n_points - 1));
        DiagramRow row;
        row.s = s;
        row.F = char_F(sys, s);
        row.F_prime = char_F_prime(sys, s);
        RowAux a;
        a.q = char_H_t(sys, s, s);
        if (row.F > 0.0) {
            const CrossingCheck check = first_crossing_check(sys, s);
            row.valid = check.valid;
            a.margin = check.margin;
            a.has_margin = true;
            bool tangential = false;
            for (bool t : check.tangential) tangential |= t;
            row.grazing = tangential || std::abs(a.q) <= kBifurcationTol;
        }
        diagram.rows[i] = row;
        aux[i] = a;
    });

    auto add_point = [&](BifurcationPoint p) {
        for (const BifurcationPoint& q : diagram.points)
            if (q.kind == p.kind && std::abs(q.s - p.s) < 1e-6 * std::max(1.0, p.s)) return;
        diagram.points.push_back(std::move(p));
    };

    const double rate_scale = std::abs(sys.m0() * sys.k0());
    auto F_fn = [&](double s) { return char_F(sys, s); };
    auto Fp_fn = [&](double s) { return char_F_prime(sys, s); };
    auto Q_fn = [&](double s) { return char_H_t(sys, s, s); };
    auto margin_fn = [&](double s) { return first_crossing_check(sys, s).margin; };

    for (std::size_t i = 1; i < n_points; ++i) {
        const DiagramRow& a = diagram.rows[i - 1];
        const DiagramRow& b = diagram.rows[i];

        if ((a.F < 0.0) != (b.F < 0.0)) {
            const double s0 = detail::bisect_sign_change(F_fn, a.s, b.s, 1e-13);
            add_point({s0, char_F(sys, s0), BifurcationKind::S0, "F(s) = 0"});
        }
        if ((a.F_prime < 0.0) != (b.F_prime < 0.0)) {
            const double s3 = detail::bisect_sign_change(Fp_fn, a.s, b.s, 1e-13);
            if (char_F(sys, s3) > kBifurcationTol) {
                const bool ghost = !first_crossing_check(sys, s3).valid;
                add_point({s3, char_F(sys, s3), BifurcationKind::S3Fold,
                           ghost ? "fold on a ghost branch (tau nonempty)"
                                 : "fold of periodic orbits"});
            }
        }
        if ((aux[i - 1].q < 0.0) != (aux[i].q < 0.0)) {
            const double s1 = detail::bisect_sign_change(Q_fn, a.s, b.s, 1e-13);
            if (char_F(sys, s1) > kBifurcationTol) {
                const CrossingCheck check = first_crossing_check(sys, s1);
                const double endpoint_window = 1e-5 * s1;
                bool interior_root = false;
                for (double t : check.tau) interior_root |= (s1 - t > endpoint_window);
                if (!interior_root)
                    add_point({s1, char_F(sys, s1), BifurcationKind::S1GrazeValid,
                               "endpoint tangency, orbit exists"});
            }
        }
        if (aux[i - 1].has_margin && aux[i].has_margin &&
            (aux[i - 1].margin < 0.0) != (aux[i].margin < 0.0)) {
            const double s2 = detail::bisect_sign_change(margin_fn, a.s, b.s, 1e-13);
            if (char_F(sys, s2) > kBifurcationTol) {
                // An endpoint tangency (Q = 0) also flips the interior margin,
                // but the interior grid resolves that flip one cell late; the
                // analytic Q route has already placed the S1 point there.
                bool near_s1 = false;
                for (const BifurcationPoint& p : diagram.points)
                    near_s1 = near_s1 || (p.kind == BifurcationKind::S1GrazeValid &&
                                          std::abs(p.s - s2) <= 1e-2 * std::max(s2, 1e-6));
                if (near_s1) continue;
                if (std::abs(Q_fn(s2)) <= 1e-4 * std::max(1.0, rate_scale)) {
                    add_point({s2, char_F(sys, s2), BifurcationKind::S1GrazeValid,
                               "endpoint tangency, orbit exists"});
                } else {
                    const CrossingCheck check = first_crossing_check(sys, s2);
                    std::ostringstream os;
                    std::size_t transversal = 0, tangential = 0;
                    for (std::size_t k = 0; k < check.tau.size(); ++k) {
                        const double ht = std::abs(char_H_t(sys, check.tau[k], s2));
                        if (ht <= 1e-4 * std::max(1.0, rate_scale))
                            ++tangential;
                        else
                            ++transversal;
                    }
                    if (!check.tau.empty())
                        os << "interior tangency at t = " << check.tau.front();
                    else
                        os << "interior tangency at the margin maximum";
                    if (transversal > 0 && tangential > 0)
                        os << " (mixed: tangential and transversal interior roots)";
                    add_point({s2, char_F(sys, s2), BifurcationKind::S2GrazeInvalid, os.str()});
                }
            }
        }
    }

    std::sort(diagram.points.begin(), diagram.points.end(),
              [](const BifurcationPoint& x, const BifurcationPoint& y) { return x.s < y.s; });
    return diagram;
}

struct GapCount {
    double gap = 0.0;
    std::size_t n_valid = 0;
    std::size_t n_ghost = 0;
};

/// Number of genuine and ghost periodic orbits for each threshold gap. The
/// counts are piecewise constant between consecutive bifurcation gap values.
inline std::vector<GapCount> count_solutions_vs_gap(const SpectralSystem& sys,
                                                    const std::vector<double>& gap_grid,
                                                    double s_max = 0.0) {
    for (double g : gap_grid)
        if (!(g > 0.0)) throw ConfigError("count_solutions_vs_gap: gaps must be positive");

    double s_hi = s_max;
    if (s_hi <= 0.0) {
        double max_gap = 0.0;
        for (double g : gap_grid) max_gap = std::max(max_gap, g);
        s_hi = std::max(1.0, char_F_monotone_beyond(sys));
        int guard = 0;
        while (char_F(sys, s_hi) <= max_gap && guard++ < 80) s_hi *= 2.0;
    }

    std::vector<GapCount> table(gap_grid.size());
    thermorelay::detail::parallel_for(gap_grid.size(), [&](std::size_t i) {
        GapCount entry;
        entry.gap = gap_grid[i];
        const auto sols = enumerate_periodic(sys, 0.0, gap_grid[i], s_hi);
        for (const PeriodicSolution& sol : sols)
            (sol.valid ? entry.n_valid : entry.n_ghost) += 1;
        table[i] = entry;
    });
    return table;
}

}  // namespace thermorelay
