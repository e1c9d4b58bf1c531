#pragma once

#include <vector>

namespace perfhom {

using Vec = std::vector<double>;

/// Row-major dense matrix, value semantics.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, 0.0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double* row(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }
    const double* row(int i) const { return data_.data() + static_cast<std::size_t>(i) * cols_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    static DenseMatrix identity(int n);
    DenseMatrix transposed() const;
    Vec apply(const Vec& x) const;
    double frobenius_norm() const;
    double max_asymmetry() const;
    void symmetrize();

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// ---- full symmetric eigendecomposition: cyclic Jacobi (the oracle path) ----

struct EigResult {
    Vec values;          // ascending
    DenseMatrix vectors; // column k pairs with values[k]; deterministic sign
};

/// Cyclic Jacobi with thresholding. Unconditionally convergent; terminates when
/// the off-diagonal Frobenius norm drops below 1e-12 * ||A||_F. Size-limited
/// (n <= 4000) by design; this is the desk-scale oracle.
EigResult dense_eig_oracle(DenseMatrix a);

// ---- production symmetric eigensolver: Householder + implicit QL ----

/// Householder reduction to tridiagonal form. Reflectors stay packed in the
/// working matrix so selected eigenvectors can be back-transformed later.
struct Tridiagonalization {
    DenseMatrix packed; // reflector k in column k, rows k+2..n-1 (v[k+1] = 1 implicit)
    Vec beta;
    Vec d, e;           // diagonal and subdiagonal (e[0] unused)
};

Tridiagonalization tridiagonalize(DenseMatrix a);

/// All eigenvalues of the symmetric tridiagonal (d, e), ascending. Implicit-shift QL.
Vec tridiagonal_eigenvalues(Vec d, Vec e);

/// Eigenvectors of the tridiagonal for the selected indices into the ascending
/// eigenvalue list; inverse iteration with cluster re-orthogonalization.
std::vector<Vec> tridiagonal_eigenvectors(const Vec& d, const Vec& e, const Vec& values,
                                          const std::vector<int>& indices);

Vec apply_q(const Tridiagonalization& t, Vec z);

/// Convenience wrapper: all eigenvalues, vectors only for `indices` (ascending order).
struct PartialEig {
    Vec values;
    std::vector<int> indices;
    std::vector<Vec> vectors;
};
PartialEig symmetric_eig_partial(DenseMatrix a, const std::vector<int>& indices);

// ---- factorizations ----

/// Dense Cholesky A = L L^T (lower). Throws SolverError when A is not SPD.
DenseMatrix cholesky(const DenseMatrix& a);
void forward_solve(const DenseMatrix& l, Vec& b);        // L y = b
void backward_solve_trans(const DenseMatrix& l, Vec& b); // L^T x = y
/// B <- L^{-1} B, all columns at once (row-oriented substitution).
void forward_solve_multi(const DenseMatrix& l, DenseMatrix& b);

/// Banded SPD Cholesky; stores L(i, j) for i-bw <= j <= i.
class BandedCholesky {
public:
    BandedCholesky(int n, int bw) : n_(n), bw_(bw),
        data_(static_cast<std::size_t>(n) * (bw + 1), 0.0) {}

    int n() const { return n_; }
    int bandwidth() const { return bw_; }
    double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * (bw_ + 1) + (j - i + bw_)]; }
    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * (bw_ + 1) + (j - i + bw_)]; }

    void factor(); // in place; throws SolverError if not SPD
    void forward(Vec& b) const;
    void backward_trans(Vec& b) const;
    void forward_multi(DenseMatrix& b) const;

private:
    int n_, bw_;
    std::vector<double> data_;
};

/// Dense LU with partial pivoting; solves A x = b (A consumed).
Vec lu_solve(DenseMatrix a, Vec b);

/// Fix the sign convention: first component with |z_i| > 1e-12 * max|z| made positive.
void canonical_sign(Vec& z);

} // namespace perfhom
