#pragma once

#include "perfhom/assembly.hpp"
#include "perfhom/cell.hpp"
#include "perfhom/geometry.hpp"
#include "perfhom/pencil.hpp"

#include <array>
#include <memory>

namespace perfhom {

/// Solution of the eps-problem on Omega^eps: both signed sequences with the
/// requested orthonormalization, plus the quadrature Gram matrices used to
/// verify it.
struct EpsSolution {
    int n = 0;
    std::shared_ptr<const DomainMesh> mesh;
    std::shared_ptr<const DofMap> dofmap;
    TwoSidedSpectrum spectrum;
    DenseMatrix gram_pos, gram_neg; // int rho^eps u^k u^l by direct quadrature

    double eps() const { return 1.0 / n; }
};

/// Solve (1.1) on the mesh: Dirichlet on dOmega, natural condition on the hole
/// boundaries. `tag` BSigned gives int rho u^2 = sign(lambda); BScaledEps
/// rescales to +-eps. The normalization is re-verified by quadrature.
EpsSolution solve_eps_spectrum(std::shared_ptr<const DomainMesh> mesh,
                               const CoefficientField& coeff, const DensityField& density,
                               int count_pos, int count_neg,
                               NormalizationTag tag = NormalizationTag::BSigned);

/// Hole-filled companion of a perforated domain mesh with the vertex
/// correspondence; built once and reused for extensions and pairings.
struct FilledDomain {
    std::shared_ptr<const DomainMesh> filled;
    std::vector<int> filled_from_perforated; // perforated vertex -> filled vertex
    std::vector<int> hole_interior;          // filled vertices absent from the perforated mesh
};
FilledDomain make_filled_domain(const DomainMesh& mesh, int dof_budget = 400000);

/// Discrete harmonic extension across the holes: keeps u on Omega^eps, solves
/// the 5-point Laplacian inside each hole with the trace from dT^eps.
Vec harmonic_extension(const DomainMesh& mesh, const FilledDomain& fd, const Vec& u_vertex);

/// ||D(P_eps u)||_{L2(Omega)} / ||D u||_{L2(Omega^eps)} for the extension above.
double extension_gradient_ratio(const DomainMesh& mesh, const FilledDomain& fd,
                                const Vec& u_vertex, const Vec& extended_vertex);

/// Periodic factor of a separable two-scale test function, living on the
/// hole-filled reference cell: either a P1 vertex field or a P0 element field.
struct CellFactor {
    enum class Kind { VertexP1, ElementP0 };
    Kind kind = Kind::VertexP1;
    Vec values; // per filled-cell vertex or per filled-cell element
    double cell_integral = 0.0; // int_Y of the factor

    static CellFactor from_cell_vertex_field(const CellMesh& perf_cell, const Vec& vertex_values);
    static CellFactor from_cell_element_field(const CellMesh& perf_cell,
                                              const std::vector<double>& element_values,
                                              double hole_value = 0.0);
};

/// int_Omega u(x) phi0(x) phi1(x/eps) dx with exact P1 quadrature on the
/// hole-filled mesh; u and phi0 are vertex fields on the filled mesh.
double two_scale_pairing(const FilledDomain& fd, const Vec& u_vertex, const Vec& phi0_vertex,
                         const CellFactor& phi1);

/// (1/eps) * two_scale_pairing; requires |int_Y psi1| <= 1e-12.
double scaled_pairing(const FilledDomain& fd, const Vec& u_vertex, const Vec& psi0_vertex,
                      const CellFactor& psi1);

/// Constant P1 gradient of a vertex field on one triangle.
std::array<double, 2> triangle_gradient(const DomainMesh& mesh, std::size_t t, const Vec& vertex_values);
std::array<double, 2> triangle_gradient(const CellMesh& mesh, std::size_t t, const Vec& vertex_values);

/// int rho u v over the mesh by direct per-element quadrature (independent of
/// the assembled mass matrix).
double weighted_l2_product(const DomainMesh& mesh, const DensityField& density, const Vec& u_vertex,
                           const Vec& v_vertex);
double plain_l2_product(const DomainMesh& mesh, const Vec& u_vertex, const Vec& v_vertex);

} // namespace perfhom
