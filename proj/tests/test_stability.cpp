#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "thermorelay/characteristic.hpp"
#include "thermorelay/dynamics.hpp"
#include "thermorelay/eigen.hpp"
#include "thermorelay/spectral_system.hpp"
#include "thermorelay/stability.hpp"

using namespace thermorelay;

namespace {
SpectralSystem rod(double m0, std::size_t n = 16) {
    return build_rod_model(n, {{0, m0}, {1, 4.0}, {2, 4.0}});
}

PeriodicSolution solution_at(const SpectralSystem& sys, double s) {
    const double gap = char_F(sys, s);
    for (const auto& sol : enumerate_periodic(sys, 0.0, gap, std::max(1.0, 2.0 * s)))
        if (std::abs(sol.s - s) < 1e-6) return sol;
    throw std::runtime_error("test setup: solution not found");
}
}  // namespace

TEST_CASE("Q functions: limits and the switching-rate identity") {
    const auto sys = rod(2.0);
    const QFunctions tiny = q_functions(sys, 1e-10);
    for (double qj : tiny.q_j) CHECK(qj == Catch::Approx(1.0).margin(1e-9));
    CHECK(tiny.q == Catch::Approx(validate(sys).M).margin(1e-9));

    const QFunctions huge = q_functions(sys, 200.0);
    for (double qj : huge.q_j) CHECK(qj == Catch::Approx(0.0).margin(1e-12));
    CHECK(huge.q == Catch::Approx(sys.m0() * sys.k0()).epsilon(1e-14));

    // Q(s) equals dH/dt at t = s and the mean rate at the switching point of
    // the constructed orbit.
    for (double s : {0.1, 0.6, 2.0}) {
        const QFunctions qf = q_functions(sys, s);
        CHECK(qf.q == Catch::Approx(char_H_t(sys, s, s)).margin(1e-14));
        const ModeVector psi = symmetric_initial(sys, 0.0, s);
        const ModeVector at_s = advance_modes(sys, psi, +1, s);
        CHECK(qf.q == Catch::Approx(mean_rate(sys, at_s, +1)).margin(1e-12));
    }
}

TEST_CASE("A(s) tends to the identity as s -> 0 and to zero as s -> inf") {
    const auto sys = rod(3.2);
    double prev_ratio = 0.0;
    for (double s : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const SquareMatrix a = matrix_A(sys, s);
        double err = 0.0;
        for (std::size_t i = 0; i < a.n; ++i)
            for (std::size_t j = 0; j < a.n; ++j)
                err = std::max(err, std::abs(a.at(i, j) - (i == j ? 1.0 : 0.0)));
        const double ratio = err / s;  // O(s) convergence: bounded ratio
        if (prev_ratio > 0.0) CHECK(ratio <= 1.5 * prev_ratio);
        prev_ratio = ratio;
    }
    const SquareMatrix far = matrix_A(sys, 80.0);
    CHECK(far.max_abs_entry() < 1e-12);
}

TEST_CASE("scalar case N = 1 collapses to 1 - E1 m0 K0 / Q") {
    const auto sys = build_rod_model(6, {{0, 1.0}, {1, 2.0}});
    for (double s : {0.2, 1.0, 3.0}) {
        const SquareMatrix a = matrix_A(sys, s);
        REQUIRE(a.n == 1);
        const QFunctions qf = q_functions(sys, s);
        const double e1 = 1.0 - std::exp(-sys.lambdas[1] * s);
        CHECK(a.at(0, 0) == Catch::Approx(1.0 - e1 * sys.m0() * sys.k0() / qf.q).margin(1e-14));
    }
}

TEST_CASE("determinant identity on both rod configurations") {
    for (double m0 : {2.0, 3.2}) {
        const auto sys = rod(m0);
        for (double s : {1e-3, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 20.0})
            CHECK(det_identity_check(sys, s) <= 1e-9);
    }
    // Spot values from the module contract.
    CHECK(det_identity_check(rod(2.0), 0.5) <= 1e-10);
    CHECK(det_identity_check(rod(3.2), 1.0) <= 1e-10);
    // Scalar case: the identity is algebraic.
    const auto n1 = build_rod_model(6, {{0, 1.0}, {1, 2.0}});
    for (double s : {0.05, 0.8, 5.0}) CHECK(det_identity_check(n1, s) <= 1e-12);
}

TEST_CASE("classification: one sensor mode is stable at any gap") {
    const auto sys = build_rod_model(6, {{0, 1.0}, {1, 2.0}});
    for (double gap : {0.05, 0.5, 2.0}) {
        bool found = false;
        for (const auto& sol : enumerate_periodic(sys, 0.0, gap, 20.0)) {
            if (!sol.valid) continue;
            found = true;
            const StabilityReport rep = classify(sys, sol);
            CHECK(rep.classification == StabilityClass::Stable);
            REQUIRE(rep.mus.size() == 1);
            CHECK(std::abs(rep.mus[0]) < 1.0);
            CHECK(std::abs(rep.mus[0].imag()) < 1e-14);
        }
        CHECK(found);
    }
}

TEST_CASE("determinant identity cross-checked by LU") {
    const auto sys = rod(3.2);
    for (double s : {0.3, 1.2}) {
        SquareMatrix b = matrix_A(sys, s);
        for (std::size_t i = 0; i < b.n; ++i) b.at(i, i) -= 1.0;
        const double lu = lu_determinant(b);
        const QFunctions qf = q_functions(sys, s);
        double rhs = sys.m0() * sys.k0() / qf.q;
        if (b.n % 2 == 1) rhs = -rhs;
        for (std::size_t j : sys.sensor_indices()) rhs *= 1.0 - std::exp(-sys.lambdas[j] * s);
        CHECK(lu == Catch::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("classification: single guiding mode is stable") {
    const auto sys = build_rod_model(4, {{0, 1.0}});
    const auto sols = enumerate_periodic(sys, 0.0, 0.4, 10.0);
    REQUIRE(sols.size() == 1);
    const StabilityReport rep = classify(sys, sols[0]);
    CHECK(rep.classification == StabilityClass::Stable);
    CHECK(rep.mus.empty());
}

TEST_CASE("classification brackets the m0/m1 threshold") {
    // Below 3 sqrt(2)/5: unstable; above: stable (small half-period).
    const auto unstable_sys = rod(0.7 * 4.0);
    const StabilityReport u = classify(unstable_sys, solution_at(unstable_sys, 0.02));
    CHECK(u.classification == StabilityClass::Unstable);
    CHECK(u.max_abs_mu > 1.0);
    CHECK(u.min_abs_mu > 1.0);  // complex pair: no saddle here

    const auto stable_sys = rod(1.0 * 4.0);
    const StabilityReport st = classify(stable_sys, solution_at(stable_sys, 0.02));
    CHECK(st.classification == StabilityClass::Stable);
    CHECK(st.max_abs_mu < 1.0);
}

TEST_CASE("odd sensor count with negative trace sum gives a saddle") {
    const auto sys =
        build_rod_model(5, {{0, 2.5}, {1, 3.0}, {2, 0.1}, {3, -2.0}});
    const SmallSCriteria crit = small_s_criteria(sys);
    CHECK(crit.prediction == SmallSPrediction::PredictsUnstable);
    CHECK(crit.L_sum < 0.0);

    const PeriodicSolution sol = solution_at(sys, 0.05);
    REQUIRE(sol.valid);
    const StabilityReport rep = classify(sys, sol);
    CHECK(rep.classification == StabilityClass::Saddle);
    CHECK(rep.max_abs_mu > 1.0);
    CHECK(rep.min_abs_mu < 1.0);
}

TEST_CASE("no eigenvalue equals one when Q > 0") {
    for (double m0 : {2.0, 2.8, 3.2, 4.0}) {
        const auto sys = rod(m0);
        for (double s : {0.02, 0.3, 1.5}) {
            const SquareMatrix a = matrix_A(sys, s);
            const EigenSolution es = eigensolve(a);
            for (const auto& mu : es.values)
                CHECK(std::abs(mu - std::complex<double>(1.0, 0.0)) >
                      1e-12 * std::max(1.0, a.frobenius_norm()));
        }
    }
}

TEST_CASE("A is invariant under positive scaling of the sensor weights") {
    const auto base = rod(2.0, 5);
    // Power-of-two scaling: exact invariance, bit for bit.
    const auto doubled = build_rod_model(5, {{0, 4.0}, {1, 8.0}, {2, 8.0}});
    const SquareMatrix a1 = matrix_A(base, 0.7);
    const SquareMatrix a2 = matrix_A(doubled, 0.7);
    CHECK(a1.a == a2.a);
    // Generic scaling: invariance to rounding.
    const auto tripled = build_rod_model(5, {{0, 6.0}, {1, 12.0}, {2, 12.0}});
    const SquareMatrix a3 = matrix_A(tripled, 0.7);
    for (std::size_t i = 0; i < a1.a.size(); ++i)
        CHECK(a3.a[i] == Catch::Approx(a1.a[i]).margin(1e-15));
}

TEST_CASE("entries of A are smooth in s (analytic derivative oracle)") {
    const auto sys = rod(3.2, 5);
    const std::vector<std::size_t> J = sys.sensor_indices();
    const double s = 0.8;

    // Test-local analytic derivative of A[i][j] = delta_ij (1-E_i) + S_i sigma_j.
    auto dA = [&](std::size_t i, std::size_t j) {
        const double li = sys.lambdas[J[i]], lj = sys.lambdas[J[j]];
        const double ki = sys.k_coeffs[J[i]], mj = sys.m_coeffs[J[j]];
        const double ui = std::exp(-li * s), uj = std::exp(-lj * s);
        double q = sys.m0() * sys.k0(), dq = 0.0;
        for (std::size_t r : J) {
            const double lr = sys.lambdas[r], ur = std::exp(-lr * s);
            q += sys.m_coeffs[r] * sys.k_coeffs[r] * 2.0 * ur / (1.0 + ur);
            dq += sys.m_coeffs[r] * sys.k_coeffs[r] * (-2.0 * lr * ur) / ((1.0 + ur) * (1.0 + ur));
        }
        const double qi = 2.0 * ui / (1.0 + ui);
        const double dqi = -2.0 * li * ui / ((1.0 + ui) * (1.0 + ui));
        const double si = ki * qi / q;
        const double dsi = ki * (dqi * q - qi * dq) / (q * q);
        const double ej = 1.0 - uj, dej = lj * uj;
        double d = dsi * mj * ej + si * mj * dej;
        if (i == j) d -= li * ui;  // d(1 - E_i)/ds
        return d;
    };

    for (double h : {1e-4, 5e-5}) {
        const SquareMatrix ap = matrix_A(sys, s + h);
        const SquareMatrix am = matrix_A(sys, s - h);
        for (std::size_t i = 0; i < ap.n; ++i)
            for (std::size_t j = 0; j < ap.n; ++j) {
                const double fd = (ap.at(i, j) - am.at(i, j)) / (2.0 * h);
                CHECK(fd == Catch::Approx(dA(i, j)).margin(1e-6));
            }
    }
}

TEST_CASE("classify cross-checks Q against the simulated rate") {
    const auto sys = rod(3.2);
    PeriodicSolution sol = solution_at(sys, 0.3);
    REQUIRE(sol.valid);
    CHECK_NOTHROW(classify(sys, sol));
    // Tampering with s breaks the internal consistency between the closed
    // form and the simulated switching rate.
    sol.s += 1e-3;
    CHECK_THROWS_AS(classify(sys, sol), NumericError);
}

TEST_CASE("classify refuses invalid solutions") {
    const auto sys = rod(2.0);
    const auto sols = enumerate_periodic(sys, 0.0, 0.04, 8.0);
    for (const auto& sol : sols) {
        if (sol.valid) continue;
        CHECK_THROWS_AS(classify(sys, sol), NumericError);
    }
}

TEST_CASE("small-s criteria reproduce the worked thresholds") {
    CHECK(small_s_criteria(rod(0.5 * 4.0)).prediction == SmallSPrediction::PredictsUnstable);
    CHECK(small_s_criteria(rod(1.0 * 4.0)).prediction == SmallSPrediction::PredictsStable);
    CHECK(small_s_criteria(build_rod_model(3, {{0, 1.0}})).prediction ==
          SmallSPrediction::PredictsStable);

    // Coupling sum M <= 0: the hypothesis fails.
    const auto bad = make_system({0.0, 1.0}, {0.1, 5.0}, {0.1, -1.0});
    CHECK(small_s_criteria(bad).prediction == SmallSPrediction::Indeterminate);

    // N = 2 block carries the quadratic coefficients.
    const SmallSCriteria crit = small_s_criteria(rod(4.0));
    CHECK(crit.J2 > 0.0);
    CHECK(crit.M == Catch::Approx(4.0 * 0.5641895835477563).epsilon(1e-14));
}

TEST_CASE("matrix_A rejects systems without sensor modes") {
    const auto sys = build_rod_model(3, {{0, 1.0}});
    CHECK_THROWS_AS(matrix_A(sys, 0.5), ConfigError);
}
