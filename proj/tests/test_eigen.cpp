#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "thermorelay/eigen.hpp"

using namespace thermorelay;

namespace {

SquareMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    SquareMatrix m(rows.size());
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (double x : row) m.at(i, j++) = x;
        ++i;
    }
    return m;
}

std::vector<std::complex<double>> sorted_by_real(std::vector<std::complex<double>> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return v;
}

}  // namespace

TEST_CASE("identity and diagonal matrices") {
    const EigenSolution id = eigensolve(SquareMatrix::identity(5));
    for (const auto& mu : id.values) {
        CHECK(mu.real() == Catch::Approx(1.0).margin(1e-13));
        CHECK(mu.imag() == Catch::Approx(0.0).margin(1e-13));
    }
    SquareMatrix d(4);
    d.at(0, 0) = -3.0;
    d.at(1, 1) = 0.5;
    d.at(2, 2) = 2.0;
    d.at(3, 3) = 7.0;
    const auto mus = sorted_by_real(eigensolve(d).values);
    CHECK(mus[0].real() == Catch::Approx(-3.0).margin(1e-12));
    CHECK(mus[1].real() == Catch::Approx(0.5).margin(1e-12));
    CHECK(mus[2].real() == Catch::Approx(2.0).margin(1e-12));
    CHECK(mus[3].real() == Catch::Approx(7.0).margin(1e-12));
}

TEST_CASE("2x2 blocks: symmetric, rotation, Jordan") {
    const auto sym = sorted_by_real(eigensolve(from_rows({{2.0, 1.0}, {1.0, 2.0}})).values);
    CHECK(sym[0].real() == Catch::Approx(1.0).margin(1e-14));
    CHECK(sym[1].real() == Catch::Approx(3.0).margin(1e-14));

    const auto rot = eigensolve(from_rows({{0.0, -1.0}, {1.0, 0.0}})).values;
    CHECK(std::abs(rot[0].real()) < 1e-14);
    CHECK(std::abs(std::abs(rot[0].imag()) - 1.0) < 1e-14);
    CHECK(rot[0] == std::conj(rot[1]));

    const auto jordan = eigensolve(from_rows({{1.0, 1.0}, {0.0, 1.0}})).values;
    CHECK(jordan[0].real() == Catch::Approx(1.0).margin(1e-12));
    CHECK(jordan[1].real() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("random 2x2 against the quadratic formula") {
    std::mt19937_64 rng(31337u);
    std::uniform_real_distribution<double> unif(-4.0, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        SquareMatrix m(2);
        for (std::size_t i = 0; i < 4; ++i) m.a[i] = unif(rng);
        const double tr = m.at(0, 0) + m.at(1, 1);
        const double det = m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
        const auto mus = eigensolve(m).values;
        const double sum = mus[0].real() + mus[1].real();
        const std::complex<double> prod = mus[0] * mus[1];
        CHECK(sum == Catch::Approx(tr).margin(1e-12));
        CHECK(prod.real() == Catch::Approx(det).margin(1e-12));
        CHECK(std::abs(prod.imag()) < 1e-12);
    }
}

TEST_CASE("random matrices: trace, determinant, residual") {
    std::mt19937_64 rng(90210u);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 8);
        SquareMatrix m(n);
        for (auto& x : m.a) x = unif(rng);

        const EigenSolution es = eigensolve(m);
        REQUIRE(es.values.size() == n);
        CHECK(es.max_residual <= 1e-10);

        double tr = 0.0;
        for (std::size_t i = 0; i < n; ++i) tr += m.at(i, i);
        std::complex<double> sum(0.0, 0.0), prod(1.0, 0.0);
        for (const auto& mu : es.values) {
            sum += mu;
            prod *= mu;
        }
        const double scale = std::max(1.0, m.frobenius_norm());
        CHECK(sum.real() == Catch::Approx(tr).margin(1e-10 * scale));
        CHECK(std::abs(sum.imag()) <= 1e-10 * scale);

        const double det = lu_determinant(m);
        const double det_scale = std::max({1.0, std::abs(det), std::abs(prod)});
        CHECK(std::abs(prod - std::complex<double>(det, 0.0)) <= 1e-9 * det_scale);
    }
}

TEST_CASE("balancing handles badly scaled matrices") {
    // D A D^-1 with strong scaling: eigenvalues must survive.
    SquareMatrix m = from_rows({{1.0, 1e7, 0.0}, {1e-7 * 2.0, 2.0, 1e7 * 0.5}, {0.0, 1e-7, 3.0}});
    const auto mus = sorted_by_real(eigensolve(m).values);
    // Same spectrum as {{1,1,0},{2,2,0.5},{0,1,3}} scaled by D = diag(1, 1e-7, 1e-14)... the
    // similarity leaves eigenvalues of the unscaled matrix below.
    SquareMatrix plain = from_rows({{1.0, 1.0, 0.0}, {2.0, 2.0, 0.5}, {0.0, 1.0, 3.0}});
    const auto ref = sorted_by_real(eigensolve(plain).values);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(mus[i].real() == Catch::Approx(ref[i].real()).margin(1e-9));
        CHECK(mus[i].imag() == Catch::Approx(ref[i].imag()).margin(1e-9));
    }
}

TEST_CASE("degenerate sizes and the size cap") {
    CHECK(eigensolve(SquareMatrix()).values.empty());
    SquareMatrix one(1);
    one.at(0, 0) = -2.5;
    CHECK(eigensolve(one).values[0].real() == -2.5);
    CHECK_THROWS_AS(eigensolve(SquareMatrix(65)), ConfigError);
}

TEST_CASE("determinant via LU") {
    CHECK(lu_determinant(SquareMatrix::identity(4)) == Catch::Approx(1.0));
    CHECK(lu_determinant(from_rows({{2.0, 0.0}, {0.0, 3.0}})) == Catch::Approx(6.0));
    CHECK(lu_determinant(from_rows({{0.0, 1.0}, {1.0, 0.0}})) == Catch::Approx(-1.0));
    CHECK(lu_determinant(from_rows({{1.0, 2.0}, {2.0, 4.0}})) == 0.0);
}

TEST_CASE("matrix multiply") {
    const SquareMatrix a = from_rows({{1.0, 2.0}, {3.0, 4.0}});
    const SquareMatrix sq = a.multiply(a);
    CHECK(sq.at(0, 0) == 7.0);
    CHECK(sq.at(0, 1) == 10.0);
    CHECK(sq.at(1, 0) == 15.0);
    CHECK(sq.at(1, 1) == 22.0);
}
