#pragma once

// Dense real eigensolver for small matrices (N <= 64): Osborne balancing,
// Householder reduction to Hessenberg form, Francis double-shift QR with
// deflation, and complex inverse iteration for per-eigenpair residual
// checks. Also a pivoted-LU determinant used as an independent route in the
// determinant-identity verification.

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "thermorelay/common.hpp"

namespace thermorelay {

struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> a;  // row major

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }

    static SquareMatrix identity(std::size_t size) {
        SquareMatrix m(size);
        for (std::size_t i = 0; i < size; ++i) m.at(i, i) = 1.0;
        return m;
    }

    SquareMatrix multiply(const SquareMatrix& other) const {
        SquareMatrix out(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const double aik = at(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) out.at(i, j) += aik * other.at(k, j);
            }
        return out;
    }

    double frobenius_norm() const {
        double acc = 0.0;
        for (double x : a) acc += x * x;
        return std::sqrt(acc);
    }

    double max_abs_entry() const {
        double m = 0.0;
        for (double x : a) m = std::max(m, std::abs(x));
        return m;
    }
};

namespace eig_detail {

// Osborne balancing: diagonal similarity scaling by radix powers so that row
// and column norms roughly match.
inline void balance(SquareMatrix& m) {
    const std::size_t n = m.n;
    const double radix = 2.0, sq = radix * radix;
    bool done = false;
    int sweeps = 0;
    while (!done && sweeps++ < 50) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(m.at(j, i));
                r += std::abs(m.at(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix, f = 1.0, s = c + r;
            while (c < g) {
                f *= radix;
                c *= sq;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sq;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                const double ginv = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) m.at(i, j) *= ginv;
                for (std::size_t j = 0; j < n; ++j) m.at(j, i) *= f;
            }
        }
    }
}

// Householder reduction to upper Hessenberg form (similarity transform).
inline void hessenberg(SquareMatrix& m) {
    const std::size_t n = m.n;
    if (n < 3) return;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        double scale = 0.0;
        for (std::size_t i = k; i < n; ++i) scale += std::abs(m.at(i, k - 1));
        if (scale == 0.0) continue;
        std::vector<double> v(n, 0.0);
        double sigma = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            v[i] = m.at(i, k - 1) / scale;
            sigma += v[i] * v[i];
        }
        double alpha = std::sqrt(sigma);
        if (v[k] > 0.0) alpha = -alpha;
        const double beta = sigma - v[k] * alpha;
        if (beta == 0.0) continue;
        v[k] -= alpha;
        // m <- P m P with P = I - v v^T / beta
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i] * m.at(i, j);
            dot /= beta;
            for (std::size_t i = k; i < n; ++i) m.at(i, j) -= dot * v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = k; j < n; ++j) dot += m.at(i, j) * v[j];
            dot /= beta;
            for (std::size_t j = k; j < n; ++j) m.at(i, j) -= dot * v[j];
        }
        m.at(k, k - 1) = scale * alpha;
        for (std::size_t i = k + 1; i < n; ++i) m.at(i, k - 1) = 0.0;
    }
}

// Eigenvalues of a real 2x2 block. The discriminant is formed as
// ((a-d)/2)^2 + bc, not (tr/2)^2 - det, which cancels catastrophically for
// nearly equal eigenvalues.
inline void eig2x2(double a, double b, double c, double d, std::complex<double>& w1,
                   std::complex<double>& w2) {
    const double half_tr = 0.5 * (a + d);
    const double half_diff = 0.5 * (a - d);
    const double disc = half_diff * half_diff + b * c;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        const double l1 = (half_tr >= 0.0) ? half_tr + root : half_tr - root;
        const double det = a * d - b * c;
        w1 = std::complex<double>(l1, 0.0);
        w2 = std::complex<double>((l1 != 0.0) ? det / l1 : half_tr - root, 0.0);
    } else {
        const double im = std::sqrt(-disc);
        w1 = std::complex<double>(half_tr, im);
        w2 = std::complex<double>(half_tr, -im);
    }
}

// Francis double-shift QR on an upper Hessenberg matrix; returns all
// eigenvalues. Throws on non-convergence.
inline std::vector<std::complex<double>> hessenberg_qr(SquareMatrix h) {
    const std::size_t n = h.n;
    std::vector<std::complex<double>> w(n);
    if (n == 0) return w;

    double anorm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = (i > 0 ? i - 1 : 0); j < n; ++j) anorm += std::abs(h.at(i, j));
    if (anorm == 0.0) anorm = 1.0;
    const double eps = std::numeric_limits<double>::epsilon();

    long nn = static_cast<long>(n) - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        long l;
        for (;;) {
            for (l = nn; l >= 1; --l) {
                double s = std::abs(h.at(l - 1, l - 1)) + std::abs(h.at(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(h.at(l, l - 1)) <= eps * s) {
                    h.at(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = h.at(nn, nn);
            if (l == nn) {
                w[nn] = std::complex<double>(x + t, 0.0);
                --nn;
                break;
            }
            double y = h.at(nn - 1, nn - 1);
            double wprod = h.at(nn, nn - 1) * h.at(nn - 1, nn);
            if (l == nn - 1) {
                eig2x2(y + t, h.at(nn - 1, nn), h.at(nn, nn - 1), x + t, w[nn - 1], w[nn]);
                nn -= 2;
                break;
            }
            if (its == 40)
                throw NumericError(NumericError::Kind::NonConvergence,
                                   "hessenberg_qr: too many QR iterations");
            if (its == 10 || its == 20 || its == 30) {
                t += x;
                for (long i = 0; i <= nn; ++i) h.at(i, i) -= x;
                const double s = std::abs(h.at(nn, nn - 1)) + std::abs(h.at(nn - 1, nn - 2));
                y = x = 0.75 * s;
                wprod = -0.4375 * s * s;
            }
            ++its;

            double p = 0.0, q = 0.0, r = 0.0;
            long m;
            for (m = nn - 2; m >= l; --m) {
                const double z = h.at(m, m);
                const double rr = x - z, ss = y - z;
                p = (rr * ss - wprod) / h.at(m + 1, m) + h.at(m, m + 1);
                q = h.at(m + 1, m + 1) - z - rr - ss;
                r = h.at(m + 2, m + 1);
                const double scale = std::abs(p) + std::abs(q) + std::abs(r);
                p /= scale;
                q /= scale;
                r /= scale;
                if (m == l) break;
                const double u = std::abs(h.at(m, m - 1)) * (std::abs(q) + std::abs(r));
                const double v = std::abs(p) * (std::abs(h.at(m - 1, m - 1)) + std::abs(z) +
                                                std::abs(h.at(m + 1, m + 1)));
                if (u <= eps * v) break;
            }
            for (long i = m + 2; i <= nn; ++i) {
                h.at(i, i - 2) = 0.0;
                if (i != m + 2) h.at(i, i - 3) = 0.0;
            }

            for (long k = m; k <= nn - 1; ++k) {
                if (k != m) {
                    p = h.at(k, k - 1);
                    q = h.at(k + 1, k - 1);
                    r = (k != nn - 1) ? h.at(k + 2, k - 1) : 0.0;
                    x = std::abs(p) + std::abs(q) + std::abs(r);
                    if (x != 0.0) {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                double s = std::sqrt(p * p + q * q + r * r);
                if (p < 0.0) s = -s;
                if (s == 0.0) continue;
                if (k == m) {
                    if (l != m) h.at(k, k - 1) = -h.at(k, k - 1);
                } else {
                    h.at(k, k - 1) = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                double z = r / s;
                q /= p;
                r /= p;
                for (long j = k; j <= nn; ++j) {
                    double pp = h.at(k, j) + q * h.at(k + 1, j);
                    if (k != nn - 1) {
                        pp += r * h.at(k + 2, j);
                        h.at(k + 2, j) -= pp * z;
                    }
                    h.at(k + 1, j) -= pp * y;
                    h.at(k, j) -= pp * x;
                }
                const long mmin = (nn < k + 3) ? nn : k + 3;
                for (long i = l; i <= mmin; ++i) {
                    double pp = x * h.at(i, k) + y * h.at(i, k + 1);
                    if (k != nn - 1) {
                        pp += z * h.at(i, k + 2);
                        h.at(i, k + 2) -= pp * r;
                    }
                    h.at(i, k + 1) -= pp * q;
                    h.at(i, k) -= pp;
                }
            }
        }
    }
    return w;
}

// Complex LU solve with partial pivoting; overwrites nothing external.
inline bool solve_complex(std::vector<std::complex<double>> m, std::size_t n,
                          std::vector<std::complex<double>>& rhs) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(m[perm[col] * n + col]);
        for (std::size_t i = col + 1; i < n; ++i) {
            const double v = std::abs(m[perm[i] * n + col]);
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best == 0.0) return false;
        std::swap(perm[col], perm[piv]);
        const std::complex<double> diag = m[perm[col] * n + col];
        for (std::size_t i = col + 1; i < n; ++i) {
            const std::complex<double> f = m[perm[i] * n + col] / diag;
            m[perm[i] * n + col] = f;
            for (std::size_t j = col + 1; j < n; ++j) m[perm[i] * n + j] -= f * m[perm[col] * n + j];
        }
    }
    std::vector<std::complex<double>> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rhs[perm[i]];
        for (std::size_t j = 0; j < i; ++j) y[i] -= m[perm[i] * n + j] * y[j];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) y[ii] -= m[perm[ii] * n + j] * y[j];
        y[ii] /= m[perm[ii] * n + ii];
    }
    rhs = std::move(y);
    return true;
}

}  // namespace eig_detail

struct EigenSolution {
    std::vector<std::complex<double>> values;
    double max_residual = 0.0;  // max over eigenpairs of |A x - mu x| / |A|_F
};

/// Eigenvector residual via complex inverse iteration around mu.
inline double eigenpair_residual(const SquareMatrix& a, std::complex<double> mu,
                                 std::uint64_t seed = 12345) {
    const std::size_t n = a.n;
    if (n == 0) return 0.0;
    const double scale = std::max(a.frobenius_norm(), std::numeric_limits<double>::min());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    double best = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 4 && best > 1e-12; ++attempt) {
        const double jitter = (attempt + 1) * 1e-13 * (1.0 + std::abs(mu));
        const std::complex<double> shift = mu + std::complex<double>(jitter, jitter);
        std::vector<std::complex<double>> shifted(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                shifted[i * n + j] = std::complex<double>(a.at(i, j), 0.0) -
                                     ((i == j) ? shift : std::complex<double>(0.0, 0.0));
        std::vector<std::complex<double>> x(n);
        for (auto& c : x) c = std::complex<double>(unif(rng), unif(rng));
        bool ok = true;
        for (int iter = 0; iter < 3 && ok; ++iter) {
            ok = eig_detail::solve_complex(shifted, n, x);
            double norm = 0.0;
            for (const auto& c : x) norm += std::norm(c);
            norm = std::sqrt(norm);
            if (norm == 0.0) {
                ok = false;
                break;
            }
            for (auto& c : x) c /= norm;
        }
        if (!ok) continue;
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::complex<double> acc = -mu * x[i];
            for (std::size_t j = 0; j < n; ++j) acc += a.at(i, j) * x[j];
            res += std::norm(acc);
        }
        best = std::min(best, std::sqrt(res) / scale);
    }
    return best;
}

/// All eigenvalues of a real square matrix with residual certification.
/// Intended for small dense matrices; rejects n > 64.
inline EigenSolution eigensolve(const SquareMatrix& a) {
    const std::size_t n = a.n;
    if (n > 64) throw ConfigError("eigensolve: matrix larger than 64x64");
    EigenSolution out;
    if (n == 0) return out;
    if (n == 1) {
        out.values = {std::complex<double>(a.at(0, 0), 0.0)};
        return out;
    }
    if (n == 2) {
        out.values.resize(2);
        eig_detail::eig2x2(a.at(0, 0), a.at(0, 1), a.at(1, 0), a.at(1, 1), out.values[0],
                           out.values[1]);
    } else {
        SquareMatrix work = a;
        eig_detail::balance(work);
        eig_detail::hessenberg(work);
        out.values = eig_detail::hessenberg_qr(std::move(work));
    }
    for (const auto& mu : out.values)
        out.max_residual = std::max(out.max_residual, eigenpair_residual(a, mu));
    if (out.max_residual > 1e-10)
        throw NumericError(NumericError::Kind::NonConvergence,
                           "eigensolve: eigenpair residual check failed");
    return out;
}

/// Determinant through pivoted LU; the independent route used to verify the
/// eigenvalue product identity.
inline double lu_determinant(SquareMatrix m) {
    const std::size_t n = m.n;
    double det = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(m.at(col, col));
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(m.at(i, col)) > best) {
                best = std::abs(m.at(i, col));
                piv = i;
            }
        if (best == 0.0) return 0.0;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m.at(col, j), m.at(piv, j));
            det = -det;
        }
        det *= m.at(col, col);
        for (std::size_t i = col + 1; i < n; ++i) {
            const double f = m.at(i, col) / m.at(col, col);
            for (std::size_t j = col + 1; j < n; ++j) m.at(i, j) -= f * m.at(col, j);
        }
    }
    return det;
}

}  // namespace thermorelay
