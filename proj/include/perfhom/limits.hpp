#pragma once

#include "perfhom/cell.hpp"
#include "perfhom/finescale.hpp"
#include "perfhom/geometry.hpp"

#include <array>
#include <memory>

namespace perfhom {

/// Solution of one homogenized limit problem on the unperforated grid.
/// PositiveLimit: -div((1/M) q Du) = lambda u, int u^2 = 1/M.
/// NegativeLimit: -div((1/Mt) qt Dv) = xi v with Mt < 0, int v^2 = -1/Mt,
///                eigenvalues 0 > xi_1 > xi_2 >= ...
/// PencilLimit:  -div(q Du) = lambda^2 nu^2 u, two symmetric branches
///                lambda^{k,+} = -lambda^{k,-} = sqrt(mu_k)/nu,
///                int u^2 = 1/(sqrt(mu_k) nu).
struct LimitSolution {
    enum class Kind { PositiveLimit, NegativeLimit, PencilLimit };
    Kind kind = Kind::PositiveLimit;
    int grid = 0;
    std::shared_ptr<const DomainMesh> mesh; // n = 1 unperforated grid
    std::shared_ptr<const DofMap> dofmap;   // Dirichlet-eliminated
    Vec eigenvalues;                        // lambda_0^k, xi_0^k, or lambda_0^{k,+}
    Vec mu;                                 // raw Dirichlet eigenvalues of the q-form
    std::vector<Vec> eigenfunctions;        // dof vectors, regime normalization applied
    std::vector<int> cluster;
    double nu = 0.0;                        // pencil regime only
    double mass_scale = 0.0;                // M or M_tilde

    double lambda_plus(int k) const { return eigenvalues[static_cast<std::size_t>(k)]; }
    double lambda_minus(int k) const { return -eigenvalues[static_cast<std::size_t>(k)]; }
};

LimitSolution limit_positive(const Tensor2& q, double m_avg, int count, int grid,
                             int dense_budget = 4200);
LimitSolution limit_negative(const Tensor2& q_tilde, double m_tilde, int count, int grid,
                             int dense_budget = 4200);
LimitSolution limit_pencil(const Tensor2& q, double nu2, int count, int grid,
                           int dense_budget = 4200);

/// First-order corrector sampler: u1(x, y) = -sum_j d_j u0(x) chi^j(y) plus
/// lambda0 u0(x) chi^0(y) in the pencil regime. Cell fields are harmonically
/// extended into the hole so the composed gradient exists on all of Omega.
class CorrectorSampler {
public:
    CorrectorSampler(const HomogenizedModel& model, const LimitSolution& limit, int k,
                     bool pencil_branch_positive = true);

    double u0_at(double x, double y) const;
    std::array<double, 2> du0_at(double x, double y) const;
    /// D_y u1 at macroscopic point (x, y-coordinates) for a filled-cell triangle.
    std::array<double, 2> corrector_gradient(double x, double y, int filled_cell_triangle) const;
    double lambda0() const { return lambda0_; }
    bool has_lambda_term() const { return has_lambda_term_; }

    const Vec& u0_vertex() const { return u0_vertex_; }
    const CellMesh& filled_cell() const { return *filled_cell_; }

private:
    std::shared_ptr<const DomainMesh> limit_mesh_;
    Vec u0_vertex_;
    std::vector<std::array<double, 2>> du0_;
    std::shared_ptr<CellMesh> filled_cell_;
    std::vector<std::array<double, 2>> dchi1_, dchi2_, dchi0_;
    double lambda0_ = 0.0;
    bool has_lambda_term_ = false;

    int locate(double x, double y) const;
};

/// Gram matrix of the pencil-limit eigenfunctions against the closed-form
/// orthonormality target; deviations beyond tolerance are reported, not fatal.
struct OrthonormalityReport {
    DenseMatrix gram;
    DenseMatrix target;
    double max_abs_deviation = 0.0;
};
OrthonormalityReport limit_orthonormality_check(const LimitSolution& pencil_solution);

} // namespace perfhom
