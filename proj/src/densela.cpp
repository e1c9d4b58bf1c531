#include "perfhom/densela.hpp"

#include "perfhom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace perfhom {

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Vec DenseMatrix::apply(const Vec& x) const {
    Vec y(static_cast<std::size_t>(rows_), 0.0);
    for (int i = 0; i < rows_; ++i) {
        const double* r = row(i);
        double acc = 0.0;
        for (int j = 0; j < cols_; ++j) acc += r[j] * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

double DenseMatrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double DenseMatrix::max_asymmetry() const {
    double m = 0.0;
    for (int i = 0; i < rows_; ++i)
        for (int j = i + 1; j < cols_; ++j)
            m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
}

void DenseMatrix::symmetrize() {
    for (int i = 0; i < rows_; ++i) {
        for (int j = i + 1; j < cols_; ++j) {
            double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
            (*this)(i, j) = v;
            (*this)(j, i) = v;
        }
    }
}

void canonical_sign(Vec& z) {
    double mx = 0.0;
    for (double v : z) mx = std::max(mx, std::abs(v));
    if (mx == 0.0) return;
    for (double v : z) {
        if (std::abs(v) > 1e-12 * mx) {
            if (v < 0.0)
                for (double& w : z) w = -w;
            return;
        }
    }
}

// ---------------- cyclic Jacobi ----------------

EigResult dense_eig_oracle(DenseMatrix a) {
    const int n = a.rows();
    if (n != a.cols()) throw ValidationError("dense_eig_oracle: matrix must be square");
    if (n > 4000) throw BudgetError("dense_eig_oracle: size " + std::to_string(n) + " exceeds 4000");

    const double anorm_f = a.frobenius_norm();
    DenseMatrix v = DenseMatrix::identity(n);

    auto offdiag_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    const double target = 1e-12 * std::max(anorm_f, 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = offdiag_norm();
        if (off <= target) break;
        if (sweep == 99) throw SolverError("jacobi eigensolver did not converge in 100 sweeps");
        double thresh = (sweep < 3) ? 0.2 * off * off / (n * n) : 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                double g = 100.0 * std::abs(apq);
                if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
                    std::abs(a(q, q)) + g == std::abs(a(q, q))) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                if (apq * apq <= thresh) continue;
                double h = a(q, q) - a(p, p);
                double t;
                if (std::abs(h) + g == std::abs(h)) {
                    t = apq / h;
                } else {
                    double theta = 0.5 * h / apq;
                    t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                    if (theta < 0.0) t = -t;
                }
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                double tau = s / (1.0 + c);
                double happ = t * apq;
                a(p, p) -= happ;
                a(q, q) += happ;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                auto rotate = [&](DenseMatrix& mat, int i1, int j1, int i2, int j2) {
                    double g1 = mat(i1, j1), h1 = mat(i2, j2);
                    mat(i1, j1) = g1 - s * (h1 + g1 * tau);
                    mat(i2, j2) = h1 + s * (g1 - h1 * tau);
                };
                for (int j = 0; j < p; ++j) rotate(a, j, p, j, q);
                for (int j = p + 1; j < q; ++j) rotate(a, p, j, j, q);
                for (int j = q + 1; j < n; ++j) rotate(a, p, j, q, j);
                // keep the symmetric mirror in sync
                for (int j = 0; j < p; ++j) { a(p, j) = a(j, p); a(q, j) = a(j, q); }
                for (int j = p + 1; j < q; ++j) { a(j, p) = a(p, j); a(q, j) = a(j, q); }
                for (int j = q + 1; j < n; ++j) { a(j, p) = a(p, j); a(j, q) = a(q, j); }
                for (int j = 0; j < n; ++j) rotate(v, j, p, j, q);
            }
        }
    }

    EigResult r;
    r.values.resize(static_cast<std::size_t>(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
    r.vectors = DenseMatrix(n, n);
    for (int k = 0; k < n; ++k) {
        r.values[static_cast<std::size_t>(k)] = a(order[static_cast<std::size_t>(k)],
                                                  order[static_cast<std::size_t>(k)]);
        Vec col(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = v(i, order[static_cast<std::size_t>(k)]);
        canonical_sign(col);
        for (int i = 0; i < n; ++i) r.vectors(i, k) = col[static_cast<std::size_t>(i)];
    }
    return r;
}

// ---------------- Householder tridiagonalization ----------------

Tridiagonalization tridiagonalize(DenseMatrix a) {
    const int n = a.rows();
    Tridiagonalization t;
    t.beta.assign(static_cast<std::size_t>(std::max(0, n - 2)), 0.0);
    t.d.resize(static_cast<std::size_t>(n));
    t.e.assign(static_cast<std::size_t>(n), 0.0);

    Vec v(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int k = 0; k < n - 2; ++k) {
        // Householder vector for column k below the diagonal
        double scale = 0.0;
        for (int i = k + 1; i < n; ++i) scale = std::max(scale, std::abs(a(i, k)));
        if (scale == 0.0) {
            t.beta[static_cast<std::size_t>(k)] = 0.0;
            t.e[static_cast<std::size_t>(k + 1)] = 0.0;
            continue;
        }
        double sigma = 0.0;
        for (int i = k + 1; i < n; ++i) {
            double x = a(i, k) / scale;
            v[static_cast<std::size_t>(i)] = x;
            sigma += x * x;
        }
        double x1 = v[static_cast<std::size_t>(k + 1)];
        double nrm = std::sqrt(sigma);
        double alpha = (x1 >= 0.0) ? -nrm : nrm; // subdiagonal entry (scaled)
        double v1 = x1 - alpha;
        v[static_cast<std::size_t>(k + 1)] = 1.0;
        double denom = sigma - x1 * alpha; // = v1^2 + sum_{i>k+1} x_i^2 ... beta scaling below
        for (int i = k + 2; i < n; ++i) v[static_cast<std::size_t>(i)] /= v1;
        double beta = (v1 * v1) / denom;   // with v normalized to v[k+1] = 1
        t.beta[static_cast<std::size_t>(k)] = beta;
        t.e[static_cast<std::size_t>(k + 1)] = alpha * scale;

        // p = beta * A v on the trailing block (symmetric, lower triangle stored fully here)
        for (int i = k + 1; i < n; ++i) p[static_cast<std::size_t>(i)] = 0.0;
        for (int i = k + 1; i < n; ++i) {
            const double vi = v[static_cast<std::size_t>(i)];
            const double* arow = a.row(i);
            double acc = 0.0;
            for (int j = k + 1; j < i; ++j) {
                acc += arow[j] * v[static_cast<std::size_t>(j)];
                p[static_cast<std::size_t>(j)] += arow[j] * vi;
            }
            p[static_cast<std::size_t>(i)] = (p[static_cast<std::size_t>(i)] + acc + arow[i] * vi);
        }
        double pv = 0.0;
        for (int i = k + 1; i < n; ++i) {
            p[static_cast<std::size_t>(i)] *= beta;
            pv += p[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        }
        const double half = 0.5 * beta * pv;
        for (int i = k + 1; i < n; ++i)
            w[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] - half * v[static_cast<std::size_t>(i)];
        // A <- A - v w^T - w v^T; only the lower triangle is ever read
        for (int i = k + 1; i < n; ++i) {
            const double vi = v[static_cast<std::size_t>(i)];
            const double wi = w[static_cast<std::size_t>(i)];
            double* arow = a.row(i);
            for (int j = k + 1; j <= i; ++j) {
                arow[j] -= vi * w[static_cast<std::size_t>(j)] + wi * v[static_cast<std::size_t>(j)];
            }
        }
        // pack the reflector tail into column k
        for (int i = k + 2; i < n; ++i) a(i, k) = v[static_cast<std::size_t>(i)];
    }
    if (n >= 2) t.e[static_cast<std::size_t>(n - 1)] = a(n - 1, n - 2);
    for (int i = 0; i < n; ++i) t.d[static_cast<std::size_t>(i)] = a(i, i);
    t.packed = std::move(a);
    return t;
}

// ---------------- implicit-shift QL on the tridiagonal ----------------

Vec tridiagonal_eigenvalues(Vec d, Vec e) {
    const int n = static_cast<int>(d.size());
    if (n == 0) return d;
    // shift e to the NR convention e[i] = subdiagonal between i and i+1
    for (int i = 1; i < n; ++i) e[static_cast<std::size_t>(i - 1)] = e[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(n - 1)] = 0.0;

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::abs(d[static_cast<std::size_t>(m)]) + std::abs(d[static_cast<std::size_t>(m + 1)]);
                if (std::abs(e[static_cast<std::size_t>(m)]) <= 2.3e-16 * dd + 1e-300) break;
            }
            if (m != l) {
                if (++iter == 60) throw SolverError("tridiagonal QL did not converge");
                double g = (d[static_cast<std::size_t>(l + 1)] - d[static_cast<std::size_t>(l)]) /
                           (2.0 * e[static_cast<std::size_t>(l)]);
                double r = std::hypot(g, 1.0);
                g = d[static_cast<std::size_t>(m)] - d[static_cast<std::size_t>(l)] +
                    e[static_cast<std::size_t>(l)] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[static_cast<std::size_t>(i)];
                    double b = c * e[static_cast<std::size_t>(i)];
                    r = std::hypot(f, g);
                    e[static_cast<std::size_t>(i + 1)] = r;
                    if (r == 0.0) {
                        d[static_cast<std::size_t>(i + 1)] -= p;
                        e[static_cast<std::size_t>(m)] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[static_cast<std::size_t>(i + 1)] - p;
                    r = (d[static_cast<std::size_t>(i)] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[static_cast<std::size_t>(i + 1)] = g + p;
                    g = c * r - b;
                }
                if (underflow) continue;
                d[static_cast<std::size_t>(l)] -= p;
                e[static_cast<std::size_t>(l)] = g;
                e[static_cast<std::size_t>(m)] = 0.0;
            }
        } while (m != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

// ---------------- inverse iteration on the tridiagonal ----------------

namespace {

// deterministic xorshift for start vectors
struct XorShift {
    std::uint64_t s;
    explicit XorShift(std::uint64_t seed) : s(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    double next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return (static_cast<double>(s >> 11) / 9007199254740992.0) - 0.5;
    }
};

// LU factor of (T - lambda I) with partial pivoting; tridiagonal with fill-in
struct TriLU {
    Vec dl, dd, du, du2;
    std::vector<int> piv;
};

TriLU factor_shifted(const Vec& d, const Vec& e, double lambda) {
    const int n = static_cast<int>(d.size());
    TriLU f;
    f.dl.assign(static_cast<std::size_t>(n), 0.0);
    f.dd.assign(static_cast<std::size_t>(n), 0.0);
    f.du.assign(static_cast<std::size_t>(n), 0.0);
    f.du2.assign(static_cast<std::size_t>(n), 0.0);
    f.piv.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) f.dd[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i)] - lambda;
    for (int i = 1; i < n; ++i) {
        f.dl[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i)];
        f.du[static_cast<std::size_t>(i - 1)] = e[static_cast<std::size_t>(i)];
    }
    double tnorm = 0.0;
    for (int i = 0; i < n; ++i)
        tnorm = std::max({tnorm, std::abs(d[static_cast<std::size_t>(i)]), std::abs(e[static_cast<std::size_t>(i)])});
    const double safe = std::max(tnorm * 1e-20, 1e-300); // tiny pivot replacement
    for (int i = 0; i < n - 1; ++i) {
        if (std::abs(f.dd[static_cast<std::size_t>(i)]) >= std::abs(f.dl[static_cast<std::size_t>(i + 1)])) {
            f.piv[static_cast<std::size_t>(i)] = 0;
            if (f.dd[static_cast<std::size_t>(i)] == 0.0) f.dd[static_cast<std::size_t>(i)] = safe;
            double mult = f.dl[static_cast<std::size_t>(i + 1)] / f.dd[static_cast<std::size_t>(i)];
            f.dl[static_cast<std::size_t>(i + 1)] = mult;
            f.dd[static_cast<std::size_t>(i + 1)] -= mult * f.du[static_cast<std::size_t>(i)];
        } else {
            f.piv[static_cast<std::size_t>(i)] = 1;
            double mult = f.dd[static_cast<std::size_t>(i)] / f.dl[static_cast<std::size_t>(i + 1)];
            f.dd[static_cast<std::size_t>(i)] = f.dl[static_cast<std::size_t>(i + 1)];
            double tmp = f.dd[static_cast<std::size_t>(i + 1)];
            f.dd[static_cast<std::size_t>(i + 1)] = f.du[static_cast<std::size_t>(i)] - mult * tmp;
            f.du2[static_cast<std::size_t>(i)] = (i < n - 2) ? f.du[static_cast<std::size_t>(i + 1)] : 0.0;
            f.du[static_cast<std::size_t>(i)] = tmp;
            if (i < n - 2) f.du[static_cast<std::size_t>(i + 1)] = -mult * f.du2[static_cast<std::size_t>(i)];
            f.dl[static_cast<std::size_t>(i + 1)] = mult;
        }
    }
    if (f.dd[static_cast<std::size_t>(n - 1)] == 0.0) f.dd[static_cast<std::size_t>(n - 1)] = safe;
    return f;
}

void solve_shifted(const TriLU& f, Vec& b) {
    const int n = static_cast<int>(b.size());
    for (int i = 0; i < n - 1; ++i) {
        if (f.piv[static_cast<std::size_t>(i)] == 0) {
            b[static_cast<std::size_t>(i + 1)] -= f.dl[static_cast<std::size_t>(i + 1)] * b[static_cast<std::size_t>(i)];
        } else {
            double tmp = b[static_cast<std::size_t>(i)];
            b[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i + 1)];
            b[static_cast<std::size_t>(i + 1)] = tmp - f.dl[static_cast<std::size_t>(i + 1)] * b[static_cast<std::size_t>(i)];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double x = b[static_cast<std::size_t>(i)];
        if (i + 1 < n) x -= f.du[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i + 1)];
        if (i + 2 < n) x -= f.du2[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i + 2)];
        b[static_cast<std::size_t>(i)] = x / f.dd[static_cast<std::size_t>(i)];
    }
}

double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

std::vector<Vec> tridiagonal_eigenvectors(const Vec& d, const Vec& e, const Vec& values,
                                          const std::vector<int>& indices) {
    const int n = static_cast<int>(d.size());
    double tnorm = 0.0;
    for (int i = 0; i < n; ++i)
        tnorm = std::max({tnorm, std::abs(d[static_cast<std::size_t>(i)]),
                          std::abs(e[static_cast<std::size_t>(i)])});
    const double cluster_tol = std::max(1e-8 * tnorm, 1e-300);

    std::vector<int> sorted_idx = indices;
    std::sort(sorted_idx.begin(), sorted_idx.end());

    std::vector<Vec> out(indices.size());
    std::vector<Vec> cluster; // previously computed vectors of the running cluster
    double cluster_anchor = 0.0;
    int pert_count = 0;

    for (std::size_t w = 0; w < sorted_idx.size(); ++w) {
        int idx = sorted_idx[w];
        double lambda = values[static_cast<std::size_t>(idx)];
        bool same_cluster = !cluster.empty() && std::abs(lambda - cluster_anchor) <= cluster_tol;
        if (!same_cluster) {
            cluster.clear();
            cluster_anchor = lambda;
            pert_count = 0;
        } else {
            ++pert_count;
            lambda += static_cast<double>(pert_count) * 2.0 * 2.3e-16 * tnorm;
        }

        TriLU f = factor_shifted(d, e, lambda);
        XorShift rng(0x5eed0000ull + static_cast<std::uint64_t>(idx) * 7919ull);
        Vec x(static_cast<std::size_t>(n));
        for (double& v : x) v = rng.next();
        for (int it = 0; it < 5; ++it) {
            for (const Vec& prev : cluster) {
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += x[static_cast<std::size_t>(i)] * prev[static_cast<std::size_t>(i)];
                for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] -= dot * prev[static_cast<std::size_t>(i)];
            }
            double nx = norm2(x);
            if (nx == 0.0) {
                for (double& v : x) v = rng.next();
                nx = norm2(x);
            }
            for (double& v : x) v /= nx;
            Vec y = x;
            solve_shifted(f, y);
            double ny = norm2(y);
            for (double& v : y) v /= ny;
            // converged when the iterate blows up strongly (small residual)
            x = std::move(y);
            if (ny > 1.0 / (1e-10 * std::max(tnorm, 1.0)) && it >= 1) break;
        }
        for (const Vec& prev : cluster) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += x[static_cast<std::size_t>(i)] * prev[static_cast<std::size_t>(i)];
            for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] -= dot * prev[static_cast<std::size_t>(i)];
        }
        double nx = norm2(x);
        for (double& v : x) v /= nx;
        cluster.push_back(x);

        auto pos = std::find(indices.begin(), indices.end(), idx);
        out[static_cast<std::size_t>(std::distance(indices.begin(), pos))] = std::move(x);
    }
    return out;
}

Vec apply_q(const Tridiagonalization& t, Vec z) {
    const int n = static_cast<int>(z.size());
    for (int k = n - 3; k >= 0; --k) {
        double beta = t.beta[static_cast<std::size_t>(k)];
        if (beta == 0.0) continue;
        // v[k+1] = 1, v[i] = packed(i, k) for i >= k+2
        double dot = z[static_cast<std::size_t>(k + 1)];
        for (int i = k + 2; i < n; ++i) dot += t.packed(i, k) * z[static_cast<std::size_t>(i)];
        dot *= beta;
        z[static_cast<std::size_t>(k + 1)] -= dot;
        for (int i = k + 2; i < n; ++i) z[static_cast<std::size_t>(i)] -= dot * t.packed(i, k);
    }
    return z;
}

PartialEig symmetric_eig_partial(DenseMatrix a, const std::vector<int>& indices) {
    const int n = a.rows();
    PartialEig r;
    if (n == 1) {
        r.values = {a(0, 0)};
        r.indices = indices;
        for (int idx : indices) {
            (void)idx;
            r.vectors.push_back(Vec{1.0});
        }
        return r;
    }
    Tridiagonalization t = tridiagonalize(std::move(a));
    r.values = tridiagonal_eigenvalues(t.d, t.e);
    r.indices = indices;
    std::vector<Vec> zs = tridiagonal_eigenvectors(t.d, t.e, r.values, indices);
    r.vectors.reserve(zs.size());
    for (Vec& z : zs) {
        Vec u = apply_q(t, std::move(z));
        canonical_sign(u);
        r.vectors.push_back(std::move(u));
    }
    return r;
}

// ---------------- Cholesky / LU ----------------

DenseMatrix cholesky(const DenseMatrix& a) {
    const int n = a.rows();
    DenseMatrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            const double* li = l.row(i);
            const double* lj = l.row(j);
            for (int k = 0; k < j; ++k) s -= li[k] * lj[k];
            if (i == j) {
                if (s <= 0.0) {
                    throw SolverError("cholesky: matrix is not positive definite (pivot " +
                                      std::to_string(i) + ")");
                }
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

void forward_solve(const DenseMatrix& l, Vec& b) {
    const int n = l.rows();
    for (int i = 0; i < n; ++i) {
        double s = b[static_cast<std::size_t>(i)];
        const double* li = l.row(i);
        for (int k = 0; k < i; ++k) s -= li[k] * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / li[i];
    }
}

void backward_solve_trans(const DenseMatrix& l, Vec& b) {
    const int n = l.rows();
    for (int i = n - 1; i >= 0; --i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= l(k, i) * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / l(i, i);
    }
}

void forward_solve_multi(const DenseMatrix& l, DenseMatrix& b) {
    const int n = l.rows();
    const int m = b.cols();
    for (int i = 0; i < n; ++i) {
        double* bi = b.row(i);
        const double* li = l.row(i);
        for (int k = 0; k < i; ++k) {
            const double f = li[k];
            if (f == 0.0) continue;
            const double* bk = b.row(k);
            for (int j = 0; j < m; ++j) bi[j] -= f * bk[j];
        }
        const double inv = 1.0 / li[i];
        for (int j = 0; j < m; ++j) bi[j] *= inv;
    }
}

void BandedCholesky::factor() {
    for (int i = 0; i < n_; ++i) {
        int j0 = std::max(0, i - bw_);
        for (int j = j0; j <= i; ++j) {
            double s = at(i, j);
            int k0 = std::max(j0, j - bw_);
            for (int k = k0; k < j; ++k) s -= at(i, k) * at(j, k);
            if (i == j) {
                if (s <= 0.0) throw SolverError("banded cholesky: matrix is not positive definite");
                at(i, i) = std::sqrt(s);
            } else {
                at(i, j) = s / at(j, j);
            }
        }
    }
}

void BandedCholesky::forward(Vec& b) const {
    for (int i = 0; i < n_; ++i) {
        double s = b[static_cast<std::size_t>(i)];
        int k0 = std::max(0, i - bw_);
        for (int k = k0; k < i; ++k) s -= at(i, k) * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / at(i, i);
    }
}

void BandedCholesky::backward_trans(Vec& b) const {
    for (int i = n_ - 1; i >= 0; --i) {
        double s = b[static_cast<std::size_t>(i)];
        int k1 = std::min(n_ - 1, i + bw_);
        for (int k = i + 1; k <= k1; ++k) s -= at(k, i) * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(i)] = s / at(i, i);
    }
}

void BandedCholesky::forward_multi(DenseMatrix& b) const {
    const int m = b.cols();
    for (int i = 0; i < n_; ++i) {
        double* bi = b.row(i);
        int k0 = std::max(0, i - bw_);
        for (int k = k0; k < i; ++k) {
            const double f = at(i, k);
            if (f == 0.0) continue;
            const double* bk = b.row(k);
            for (int j = 0; j < m; ++j) bi[j] -= f * bk[j];
        }
        const double inv = 1.0 / at(i, i);
        for (int j = 0; j < m; ++j) bi[j] *= inv;
    }
}

Vec lu_solve(DenseMatrix a, Vec b) {
    const int n = a.rows();
    if (n != a.cols() || static_cast<int>(b.size()) != n) {
        throw ValidationError("lu_solve: dimension mismatch");
    }
    std::vector<int> piv(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(a(k, k));
        for (int i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > best) {
                best = std::abs(a(i, k));
                p = i;
            }
        }
        if (best == 0.0) throw SolverError("lu_solve: singular matrix");
        piv[static_cast<std::size_t>(k)] = p;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(p)]);
        }
        const double inv = 1.0 / a(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double f = a(i, k) * inv;
            a(i, k) = f;
            if (f == 0.0) continue;
            double* ai = a.row(i);
            const double* ak = a.row(k);
            for (int j = k + 1; j < n; ++j) ai[j] -= f * ak[j];
            b[static_cast<std::size_t>(i)] -= f * b[static_cast<std::size_t>(k)];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[static_cast<std::size_t>(i)];
        const double* ai = a.row(i);
        for (int j = i + 1; j < n; ++j) s -= ai[j] * b[static_cast<std::size_t>(j)];
        b[static_cast<std::size_t>(i)] = s / ai[i];
    }
    return b;
}

} // namespace perfhom
