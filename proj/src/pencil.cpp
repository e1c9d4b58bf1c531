#include "perfhom/pencil.hpp"

#include "perfhom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

namespace perfhom {

namespace {

double vec_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Cholesky of K, banded when the profile is narrow enough to pay off.
class KFactor {
public:
    explicit KFactor(const SymmetricOperator& k) {
        int n = k.dim();
        int bw = k.bandwidth();
        if (bw + 1 < n / 4) {
            BandedCholesky bc(n, bw);
            for (int i = 0; i < n; ++i) {
                for (int p = k.row_ptr()[static_cast<std::size_t>(i)];
                     p < k.row_ptr()[static_cast<std::size_t>(i) + 1]; ++p) {
                    int j = k.cols()[static_cast<std::size_t>(p)];
                    if (j <= i) bc.at(i, j) = k.vals()[static_cast<std::size_t>(p)];
                }
            }
            bc.factor();
            banded_.emplace(std::move(bc));
        } else {
            dense_ = cholesky(k.to_dense());
        }
    }

    explicit KFactor(const DenseMatrix& k) { dense_ = cholesky(k); }

    // C = L^{-1} B L^{-T}
    DenseMatrix congruence(DenseMatrix b) const {
        if (banded_) {
            banded_->forward_multi(b);
            b = b.transposed();
            banded_->forward_multi(b);
        } else {
            forward_solve_multi(dense_, b);
            b = b.transposed();
            forward_solve_multi(dense_, b);
        }
        b.symmetrize();
        return b;
    }

    Vec back_map(Vec w) const {
        if (banded_) {
            banded_->backward_trans(w);
        } else {
            backward_solve_trans(dense_, w);
        }
        return w;
    }

    Vec full_solve(Vec rhs) const { // K x = rhs
        if (banded_) {
            banded_->forward(rhs);
            banded_->backward_trans(rhs);
        } else {
            forward_solve(dense_, rhs);
            backward_solve_trans(dense_, rhs);
        }
        return rhs;
    }

private:
    DenseMatrix dense_;
    std::optional<BandedCholesky> banded_;
};

std::vector<int> cluster_ids(const Vec& lambda) {
    std::vector<int> c(lambda.size(), 0);
    int id = 0;
    for (std::size_t k = 1; k < lambda.size(); ++k) {
        double scale = std::max({std::abs(lambda[k]), std::abs(lambda[k - 1]), 1e-300});
        if (std::abs(lambda[k] - lambda[k - 1]) > 1e-8 * scale) ++id;
        c[k] = id;
    }
    return c;
}

void check_residual(const SymmetricOperator* k, const SymmetricOperator* b,
                    const DenseMatrix* kd, const DenseMatrix* bd,
                    const Vec& u, double lambda) {
    Vec ku = k ? k->apply(u) : kd->apply(u);
    Vec bu = b ? b->apply(u) : bd->apply(u);
    double rn = 0.0, kn = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double r = ku[i] - lambda * bu[i];
        rn += r * r;
        kn += ku[i] * ku[i];
    }
    if (!(std::sqrt(rn) <= 1e-8 * std::max(std::sqrt(kn), 1e-300))) {
        throw SolverError("pencil eigenpair residual " + std::to_string(std::sqrt(rn)) +
                          " exceeds tolerance for lambda=" + std::to_string(lambda));
    }
}

struct IndefiniteCore {
    Vec mu_all;
    std::vector<int> pos_idx, neg_idx; // indices into mu_all, selection order
    std::vector<Vec> vectors;          // per selected index, back-mapped and scaled
};

TwoSidedSpectrum indefinite_from_congruence(const KFactor& factor, DenseMatrix c,
                                            int count_pos, int count_neg, double b_norm,
                                            const SymmetricOperator* k_op,
                                            const SymmetricOperator* b_op,
                                            const DenseMatrix* k_d, const DenseMatrix* b_d) {
    const int n = c.rows();
    Tridiagonalization t = tridiagonalize(std::move(c));
    Vec mu = tridiagonal_eigenvalues(t.d, t.e);

    const double tol = 1e-12 * std::max(b_norm, 1e-300);
    int avail_neg = 0, avail_pos = 0;
    for (double m : mu) {
        if (m < -tol) ++avail_neg;
        if (m > tol) ++avail_pos;
    }
    if (count_pos > avail_pos || count_neg > avail_neg) {
        throw SolverError("requested " + std::to_string(count_pos) + "+/" +
                          std::to_string(count_neg) + "- eigenvalues, pencil has " +
                          std::to_string(avail_pos) + "+/" + std::to_string(avail_neg) +
                          "- above the mu tolerance");
    }

    // positive side: largest mu (smallest positive lambda); negative: most negative mu
    std::vector<int> wanted;
    for (int i = 0; i < count_pos; ++i) wanted.push_back(n - 1 - i);
    for (int i = 0; i < count_neg; ++i) wanted.push_back(i);
    std::vector<Vec> zs = tridiagonal_eigenvectors(t.d, t.e, mu, wanted);

    TwoSidedSpectrum out;
    auto emit = [&](SpectrumSide& side, int list_pos, double m) {
        Vec u = apply_q(t, zs[static_cast<std::size_t>(list_pos)]);
        u = factor.back_map(std::move(u));
        double scale = 1.0 / std::sqrt(std::abs(m));
        for (double& x : u) x *= scale;
        canonical_sign(u);
        double lambda = 1.0 / m;
        check_residual(k_op, b_op, k_d, b_d, u, lambda);
        side.lambda.push_back(lambda);
        side.mu.push_back(m);
        side.vectors.push_back(std::move(u));
    };
    for (int i = 0; i < count_pos; ++i) emit(out.positive, i, mu[static_cast<std::size_t>(n - 1 - i)]);
    for (int i = 0; i < count_neg; ++i) emit(out.negative, count_pos + i, mu[static_cast<std::size_t>(i)]);
    out.positive.cluster = cluster_ids(out.positive.lambda);
    out.negative.cluster = cluster_ids(out.negative.lambda);
    return out;
}

} // namespace

TwoSidedSpectrum solve_indefinite_pencil(const SymmetricOperator& k, const SymmetricOperator& b,
                                         int count_pos, int count_neg) {
    if (k.dim() != b.dim()) throw ValidationError("pencil: dimension mismatch");
    KFactor factor(k);
    DenseMatrix c = factor.congruence(b.to_dense());
    return indefinite_from_congruence(factor, std::move(c), count_pos, count_neg, b.inf_norm(),
                                      &k, &b, nullptr, nullptr);
}

TwoSidedSpectrum solve_indefinite_pencil(const DenseMatrix& k, const DenseMatrix& b,
                                         int count_pos, int count_neg, double b_norm_hint) {
    if (k.rows() != b.rows()) throw ValidationError("pencil: dimension mismatch");
    KFactor factor(k);
    DenseMatrix c = factor.congruence(b);
    double bn = b_norm_hint;
    if (bn < 0.0) {
        bn = 0.0;
        for (int i = 0; i < b.rows(); ++i) {
            double s = 0.0;
            for (int j = 0; j < b.cols(); ++j) s += std::abs(b(i, j));
            bn = std::max(bn, s);
        }
    }
    return indefinite_from_congruence(factor, std::move(c), count_pos, count_neg, bn,
                                      nullptr, nullptr, &k, &b);
}

namespace {

struct XorShift64 {
    std::uint64_t s;
    explicit XorShift64(std::uint64_t seed) : s(seed ? seed : 1u) {}
    double next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return (static_cast<double>(s >> 11) / 9007199254740992.0) - 0.5;
    }
};

// inverse subspace iteration for the smallest eigenpairs of K u = lambda B u,
// both SPD, K banded; used above the dense budget
SpdEigenpairs spd_subspace_iteration(const SymmetricOperator& k, const SymmetricOperator& b,
                                     int count) {
    const int n = k.dim();
    const int p = std::min(n, count + 4);
    KFactor factor(k);

    XorShift64 rng(0xfeedbeef1234ull);
    std::vector<Vec> x(static_cast<std::size_t>(p), Vec(static_cast<std::size_t>(n)));
    for (auto& col : x)
        for (double& v : col) v = rng.next();

    auto b_dot = [&](const Vec& u, const Vec& v) {
        Vec bv = b.apply(v);
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += u[static_cast<std::size_t>(i)] * bv[static_cast<std::size_t>(i)];
        return s;
    };

    Vec theta(static_cast<std::size_t>(p), 0.0);
    for (int it = 0; it < 500; ++it) {
        // inverse-iterate, then B-orthonormalize (modified Gram-Schmidt)
        for (int j = 0; j < p; ++j) {
            Vec y = factor.full_solve(b.apply(x[static_cast<std::size_t>(j)]));
            x[static_cast<std::size_t>(j)] = std::move(y);
        }
        for (int j = 0; j < p; ++j) {
            Vec& xj = x[static_cast<std::size_t>(j)];
            for (int i = 0; i < j; ++i) {
                double d = b_dot(x[static_cast<std::size_t>(i)], xj);
                for (int r = 0; r < n; ++r)
                    xj[static_cast<std::size_t>(r)] -= d * x[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
            }
            double nb = std::sqrt(std::max(b_dot(xj, xj), 1e-300));
            for (double& v : xj) v /= nb;
        }
        // Rayleigh-Ritz with the K form
        DenseMatrix h(p, p);
        std::vector<Vec> kx(static_cast<std::size_t>(p));
        for (int j = 0; j < p; ++j) kx[static_cast<std::size_t>(j)] = k.apply(x[static_cast<std::size_t>(j)]);
        for (int i = 0; i < p; ++i) {
            for (int j = i; j < p; ++j) {
                double s = 0.0;
                for (int r = 0; r < n; ++r)
                    s += x[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)] *
                         kx[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
                h(i, j) = s;
                h(j, i) = s;
            }
        }
        EigResult small = dense_eig_oracle(h);
        std::vector<Vec> xnew(static_cast<std::size_t>(p), Vec(static_cast<std::size_t>(n), 0.0));
        for (int kcol = 0; kcol < p; ++kcol) {
            Vec& dst = xnew[static_cast<std::size_t>(kcol)];
            for (int j = 0; j < p; ++j) {
                double w = small.vectors(j, kcol);
                if (w == 0.0) continue;
                for (int r = 0; r < n; ++r)
                    dst[static_cast<std::size_t>(r)] += w * x[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
            }
        }
        x = std::move(xnew);
        theta = small.values;

        if (it % 5 == 4 || it >= 498) {
            bool done = true;
            for (int j = 0; j < count; ++j) {
                const Vec& u = x[static_cast<std::size_t>(j)];
                Vec ku = k.apply(u);
                Vec bu = b.apply(u);
                double rn = 0.0, kn = 0.0;
                for (int r = 0; r < n; ++r) {
                    double res = ku[static_cast<std::size_t>(r)] -
                                 theta[static_cast<std::size_t>(j)] * bu[static_cast<std::size_t>(r)];
                    rn += res * res;
                    kn += ku[static_cast<std::size_t>(r)] * ku[static_cast<std::size_t>(r)];
                }
                if (std::sqrt(rn) > 1e-9 * std::sqrt(kn)) done = false;
            }
            if (done) break;
            if (it >= 498) throw SolverError("spd subspace iteration did not converge");
        }
    }

    SpdEigenpairs out;
    for (int j = 0; j < count; ++j) {
        Vec u = x[static_cast<std::size_t>(j)];
        canonical_sign(u);
        check_residual(&k, &b, nullptr, nullptr, u, theta[static_cast<std::size_t>(j)]);
        out.lambda.push_back(theta[static_cast<std::size_t>(j)]);
        out.vectors.push_back(std::move(u));
    }
    out.cluster = cluster_ids(out.lambda);
    return out;
}

} // namespace

SpdEigenpairs solve_spd_pencil(const SymmetricOperator& k, const SymmetricOperator& b, int count,
                               int dense_budget) {
    if (k.dim() != b.dim()) throw ValidationError("pencil: dimension mismatch");
    const int n = k.dim();
    if (count > n) throw ValidationError("pencil: requested more eigenpairs than dofs");

    if (n > dense_budget) {
        return spd_subspace_iteration(k, b, count);
    }

    // factor B; a failed factorization reports the non-SPD mass
    std::optional<KFactor> bf;
    try {
        bf.emplace(b);
    } catch (const SolverError&) {
        throw SolverError("solve_spd_pencil: B is not positive definite");
    }
    DenseMatrix c = bf->congruence(k.to_dense());
    Tridiagonalization t = tridiagonalize(std::move(c));
    Vec vals = tridiagonal_eigenvalues(t.d, t.e);
    std::vector<int> wanted(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) wanted[static_cast<std::size_t>(i)] = i;
    std::vector<Vec> zs = tridiagonal_eigenvectors(t.d, t.e, vals, wanted);

    SpdEigenpairs out;
    for (int i = 0; i < count; ++i) {
        Vec u = bf->back_map(apply_q(t, std::move(zs[static_cast<std::size_t>(i)])));
        canonical_sign(u);
        double lambda = vals[static_cast<std::size_t>(i)];
        check_residual(&k, &b, nullptr, nullptr, u, lambda);
        out.lambda.push_back(lambda);
        out.vectors.push_back(std::move(u));
    }
    out.cluster = cluster_ids(out.lambda);
    return out;
}

DeflatedPencil deflate_constants(const SymmetricOperator& k, const SymmetricOperator& b) {
    const int n = k.dim();
    if (n != b.dim()) throw ValidationError("deflate_constants: dimension mismatch");
    Vec ones(static_cast<std::size_t>(n), 1.0);
    Vec bv = b.apply(ones);
    double s = 0.0;
    for (double v : bv) s += v;
    if (std::abs(s) <= 1e-12 * std::max(b.inf_norm(), 1e-300) * n) {
        throw SolverError("deflate_constants: 1^T B 1 = 0, the deflation direction is undefined "
                          "(M = 0 regime)");
    }

    // Householder reflector H with H (B 1) along e_0; W = span of H e_1..e_{n-1}
    double bn = vec_norm(bv);
    Vec v = bv;
    v[0] += (bv[0] >= 0.0 ? bn : -bn);
    double vn = vec_norm(v);
    if (vn == 0.0) throw SolverError("deflate_constants: degenerate reflector");
    for (double& x : v) x /= vn;

    auto reflect_dense = [&](DenseMatrix m) {
        // H M H with H = I - 2 v v^T
        const int nn = m.rows();
        Vec tmp(static_cast<std::size_t>(nn));
        // rows
        for (int j = 0; j < nn; ++j) {
            double dot = 0.0;
            for (int i = 0; i < nn; ++i) dot += v[static_cast<std::size_t>(i)] * m(i, j);
            tmp[static_cast<std::size_t>(j)] = 2.0 * dot;
        }
        for (int i = 0; i < nn; ++i)
            for (int j = 0; j < nn; ++j) m(i, j) -= v[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(j)];
        // columns
        for (int i = 0; i < nn; ++i) {
            double dot = 0.0;
            for (int j = 0; j < nn; ++j) dot += m(i, j) * v[static_cast<std::size_t>(j)];
            tmp[static_cast<std::size_t>(i)] = 2.0 * dot;
        }
        for (int i = 0; i < nn; ++i)
            for (int j = 0; j < nn; ++j) m(i, j) -= tmp[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
        return m;
    };

    DenseMatrix hk = reflect_dense(k.to_dense());
    DenseMatrix hb = reflect_dense(b.to_dense());

    DeflatedPencil out;
    out.reflector = v;
    out.k = DenseMatrix(n - 1, n - 1);
    out.b = DenseMatrix(n - 1, n - 1);
    for (int i = 1; i < n; ++i) {
        for (int j = 1; j < n; ++j) {
            out.k(i - 1, j - 1) = hk(i, j);
            out.b(i - 1, j - 1) = hb(i, j);
        }
    }
    out.k.symmetrize();
    out.b.symmetrize();
    return out;
}

Vec DeflatedPencil::lift(const Vec& c) const {
    const std::size_t n = reflector.size();
    Vec u(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) u[i] = c[i - 1];
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += reflector[i] * u[i];
    dot *= 2.0;
    for (std::size_t i = 0; i < n; ++i) u[i] -= dot * reflector[i];
    return u;
}

} // namespace perfhom
