#pragma once

#include "perfhom/assembly.hpp"
#include "perfhom/densela.hpp"

#include <vector>

namespace perfhom {

enum class NormalizationTag { BSigned, BScaledEps, L2 };

/// One signed branch of a pencil spectrum. `lambda[k]` pairs with
/// `vectors[k]`; `mu` holds the reciprocals 1/lambda; `cluster` groups
/// eigenvalues that agree to rel 1e-8 (paper-style multiplicity handling).
struct SpectrumSide {
    Vec lambda;
    Vec mu;
    std::vector<Vec> vectors;
    std::vector<int> cluster;

    int count() const { return static_cast<int>(lambda.size()); }
};

/// The two signed sequences of an indefinite pencil K u = lambda B u:
/// 0 < lambda^{1,+} <= lambda^{2,+} <= ...  and  0 > lambda^{1,-} >= lambda^{2,-} >= ...
/// Eigenvectors carry the signed B-normalization u^T B u = sign(lambda)
/// unless retagged by a caller.
struct TwoSidedSpectrum {
    SpectrumSide positive;
    SpectrumSide negative;
    NormalizationTag tag = NormalizationTag::BSigned;
};

/// Smallest `count` eigenpairs of K u = lambda B u with both sides SPD.
/// Eigenvectors are B-orthonormal. Dispatches to a dense congruence +
/// tridiagonal solve at desk scale and to banded-Cholesky subspace iteration
/// above `dense_budget` (the exploration path; acceptance runs stay dense).
struct SpdEigenpairs {
    Vec lambda;
    std::vector<Vec> vectors;
    std::vector<int> cluster;
};
SpdEigenpairs solve_spd_pencil(const SymmetricOperator& k, const SymmetricOperator& b, int count,
                               int dense_budget = 4200);

TwoSidedSpectrum solve_indefinite_pencil(const SymmetricOperator& k, const SymmetricOperator& b,
                                         int count_pos, int count_neg);
TwoSidedSpectrum solve_indefinite_pencil(const DenseMatrix& k, const DenseMatrix& b,
                                         int count_pos, int count_neg, double b_norm_hint = -1.0);

/// Restriction of a pencil with K PSD (kernel = constants) to the B-orthogonal
/// complement of constants, where K becomes SPD. Requires 1^T B 1 != 0.
struct DeflatedPencil {
    DenseMatrix k;
    DenseMatrix b;
    Vec reflector; // Householder vector mapping B*1 onto a coordinate axis
    Vec lift(const Vec& c) const;
};
DeflatedPencil deflate_constants(const SymmetricOperator& k, const SymmetricOperator& b);

} // namespace perfhom
