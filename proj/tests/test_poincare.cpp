#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "thermorelay/characteristic.hpp"
#include "thermorelay/dynamics.hpp"
#include "thermorelay/eigen.hpp"
#include "thermorelay/poincare.hpp"
#include "thermorelay/spectral_system.hpp"
#include "thermorelay/stability.hpp"

using namespace thermorelay;

namespace {
SpectralSystem rod(double m0, std::size_t n = 16) {
    return build_rod_model(n, {{0, m0}, {1, 4.0}, {2, 4.0}});
}

PeriodicSolution first_valid(const SpectralSystem& sys, double gap, double s_max = 8.0) {
    for (const auto& sol : enumerate_periodic(sys, 0.0, gap, s_max))
        if (sol.valid) return sol;
    throw std::runtime_error("test setup: no valid solution");
}

double weighted_distance(const SpectralSystem& sys, const ModeVector& a, const ModeVector& b) {
    std::vector<double> diff(sys.n_modes());
    for (std::size_t j = 0; j < sys.n_modes(); ++j) diff[j] = a.values[j] - b.values[j];
    return weighted_norm(sys.lambdas, diff);
}
}  // namespace

TEST_CASE("single-mode half map is a pure drift") {
    const auto sys = build_rod_model(1, {{0, 1.0}});
    const double alpha = 0.0, beta = 0.3;
    SectionPoint p{ModeVector{{alpha / sys.m0()}, 0.0}, SectionPlane::Alpha};
    const HalfMapResult res = map_P_alpha(sys, p, alpha, beta);
    const double expected = (beta - alpha) / (sys.m0() * sys.k0());
    CHECK(res.elapsed == Catch::Approx(expected).margin(1e-11));
    CHECK(res.point.v.values[0] ==
          Catch::Approx(alpha / sys.m0() + sys.k0() * expected).margin(1e-11));
    CHECK(mean_temperature(sys, res.point.v) == Catch::Approx(beta).margin(1e-11));
}

TEST_CASE("half map sends the periodic point to its symmetric partner") {
    const auto sys = rod(3.2);
    const PeriodicSolution sol = first_valid(sys, 0.40);
    SectionPoint p{sol.psi, SectionPlane::Alpha};
    const HalfMapResult res = map_P_alpha(sys, p, 0.0, 0.40);
    CHECK(res.elapsed == Catch::Approx(sol.s).margin(1e-9));
    for (std::size_t j = 1; j < sys.n_modes(); ++j)
        CHECK(res.point.v.values[j] == Catch::Approx(-sol.psi.values[j]).margin(1e-9));
}

TEST_CASE("guided perturbations do not move the arrival time") {
    const auto sys = rod(3.2);
    const PeriodicSolution sol = first_valid(sys, 0.40);
    SectionPoint p{sol.psi, SectionPlane::Alpha};
    const HalfMapResult base = map_P_alpha(sys, p, 0.0, 0.40);

    SectionPoint q = p;
    for (std::size_t j : sys.guided_indices) q.v.values[j] += 0.37 * static_cast<double>(j);
    const HalfMapResult pert = map_P_alpha(sys, q, 0.0, 0.40);
    CHECK(pert.elapsed == base.elapsed);  // bit identical
}

TEST_CASE("the periodic point is a fixed point of the full map") {
    for (double m0 : {2.0, 3.2}) {
        const auto sys = rod(m0);
        const double gap = (m0 == 2.0) ? 0.10 : 0.40;
        const PeriodicSolution sol = first_valid(sys, gap);
        const FullMapResult f = map_P(sys, SectionPoint{sol.psi, SectionPlane::Alpha}, 0.0, gap);
        CHECK(weighted_distance(sys, f.point.v, sol.psi) <= 1e-8);
        CHECK(f.period == Catch::Approx(2.0 * sol.s).margin(1e-8));
    }
}

TEST_CASE("FD Jacobian of the reduced map matches A(s)^2") {
    const auto sys = rod(3.2);
    const PeriodicSolution sol = first_valid(sys, 0.40);
    const JacobianResult jac = guiding_jacobian_fd(sys, sol);
    REQUIRE(jac.differentiable);
    const SquareMatrix a = matrix_A(sys, sol.s);
    const SquareMatrix a2 = a.multiply(a);
    REQUIRE(jac.matrix.n == a2.n);
    for (std::size_t i = 0; i < a2.n; ++i)
        for (std::size_t j = 0; j < a2.n; ++j)
            CHECK(jac.matrix.at(i, j) == Catch::Approx(a2.at(i, j)).margin(1e-5));
}

TEST_CASE("scalar guiding case: FD derivative equals mu squared") {
    const auto sys = build_rod_model(6, {{0, 1.0}, {1, 2.0}});
    const PeriodicSolution sol = first_valid(sys, 0.2, 10.0);
    const JacobianResult jac = guiding_jacobian_fd(sys, sol);
    REQUIRE(jac.matrix.n == 1);
    const SquareMatrix a = matrix_A(sys, sol.s);
    CHECK(jac.matrix.at(0, 0) == Catch::Approx(a.at(0, 0) * a.at(0, 0)).margin(1e-5));
}

TEST_CASE("grazing orbit is reported as non-differentiable") {
    const auto sys = rod(2.0);
    // Endpoint tangency: refine Q(s) = 0 and build the orbit there.
    double lo = 0.2, hi = 0.3;
    double flo = char_H_t(sys, lo, lo);
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((char_H_t(sys, mid, mid) < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = char_H_t(sys, lo, lo);
        } else {
            hi = mid;
        }
    }
    const double s1 = 0.5 * (lo + hi);
    PeriodicSolution sol;
    sol.s = s1;
    sol.F_value = char_F(sys, s1);
    sol.psi = symmetric_initial(sys, 0.0, s1);
    sol.valid = true;
    sol.grazing = true;
    const JacobianResult jac = guiding_jacobian_fd(sys, sol);
    CHECK_FALSE(jac.differentiable);
    CHECK_FALSE(jac.suspect_columns.empty());
}

TEST_CASE("guided part of the return map contracts at the closed-form rate") {
    // Mean-only sensing with a guided mode at lambda_3 = 9: a perturbation on
    // that mode shrinks by e^{-2 lambda_3 s} = e^{-18} per period at s = 1.
    const auto sys = build_rod_model(4, {{0, 1.0}});
    const double gap = char_F(sys, 1.0);  // places the half-period at s = 1
    const auto sols = enumerate_periodic(sys, 0.0, gap, 4.0);
    REQUIRE(sols.size() == 1);
    const PeriodicSolution& sol = sols[0];
    CHECK(sol.s == Catch::Approx(1.0).margin(1e-10));

    SectionPoint p{sol.psi, SectionPlane::Alpha};
    p.v.values[3] += 1.0;
    const FullMapResult once = map_P(sys, p, 0.0, gap);
    const double d1 = std::abs(once.point.v.values[3] - sol.psi.values[3]);
    CHECK(d1 == Catch::Approx(std::exp(-2.0 * 9.0 * 1.0)).epsilon(1e-6));
}

TEST_CASE("measured rate: stable orbit contracts, unstable orbit grows") {
    const auto stable_sys = rod(4.0);
    const double s = 0.04;
    const double gap_s = char_F(stable_sys, s);
    PeriodicSolution sol_s;
    for (const auto& c : enumerate_periodic(stable_sys, 0.0, gap_s, 1.0))
        if (std::abs(c.s - s) < 1e-6) sol_s = c;
    REQUIRE(sol_s.valid);
    const RateMeasurement m_stable = measure_rate(stable_sys, sol_s, 1e-6, 24, 123u);
    CHECK(m_stable.factor < 1.0);
    CHECK(m_stable.distances.size() == 25);
    CHECK(m_stable.seed == 123u);

    const auto unstable_sys = rod(2.8);
    const double gap_u = char_F(unstable_sys, s);
    PeriodicSolution sol_u;
    for (const auto& c : enumerate_periodic(unstable_sys, 0.0, gap_u, 1.0))
        if (std::abs(c.s - s) < 1e-6) sol_u = c;
    REQUIRE(sol_u.valid);
    const RateMeasurement m_unstable = measure_rate(unstable_sys, sol_u, 1e-8, 24, 123u);
    CHECK(m_unstable.factor > 1.0);
}

TEST_CASE("rate measurement is reproducible for a fixed seed") {
    const auto sys = rod(4.0);
    const double gap = char_F(sys, 0.04);
    PeriodicSolution sol;
    for (const auto& c : enumerate_periodic(sys, 0.0, gap, 1.0))
        if (std::abs(c.s - 0.04) < 1e-6) sol = c;
    REQUIRE(sol.valid);
    const RateMeasurement a = measure_rate(sys, sol, 1e-6, 6, 42u);
    const RateMeasurement b = measure_rate(sys, sol, 1e-6, 6, 42u);
    CHECK(a.factor == b.factor);
    CHECK(a.distances == b.distances);
}

TEST_CASE("half maps enforce their domain") {
    const auto sys = build_rod_model(1, {{0, 1.0}});
    SectionPoint above{ModeVector{{2.0}, 0.0}, SectionPlane::Alpha};  // mean = 2 > beta
    CHECK_THROWS_AS(map_P_alpha(sys, above, 0.0, 1.0), NumericError);
    SectionPoint below{ModeVector{{-2.0}, 0.0}, SectionPlane::Beta};  // mean = -2 < alpha
    CHECK_THROWS_AS(map_P_beta(sys, below, 0.0, 1.0), NumericError);
}
