#pragma once

#include "perfhom/densela.hpp"
#include "perfhom/geometry.hpp"
#include "perfhom/materials.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace perfhom {

enum class VertexConstraint { Free, PeriodicReplica, DirichletEliminated };

/// Vertex -> dof index after constraint elimination. Periodic replicas share
/// their master's dof; Dirichlet vertices map to -1.
struct DofMap {
    int n_dofs = 0;
    std::vector<int> vertex_to_dof;
    std::vector<VertexConstraint> kinds;
    bool mean_zero = false; // consumers add one multiplier row for int_{Y*} u = 0

    int dof(int vertex) const { return vertex_to_dof[static_cast<std::size_t>(vertex)]; }
};

DofMap build_periodic_dofmap(const CellMesh& mesh, bool mean_zero);
DofMap build_dirichlet_dofmap(const DomainMesh& mesh);
DofMap build_free_dofmap(int vertex_count);

enum class OperatorKind { Stiffness, WeightedMass, PlainMass };

/// Assembled symmetric sparse operator on the constrained dof space.
class SymmetricOperator {
public:
    SymmetricOperator() = default;
    SymmetricOperator(int dim, OperatorKind kind, std::shared_ptr<const DofMap> dofmap);

    int dim() const { return dim_; }
    OperatorKind kind() const { return kind_; }
    const std::shared_ptr<const DofMap>& dofmap() const { return dofmap_; }

    void add(int i, int j, double v); // assembly-time accumulation
    void finalize();                  // freeze into CSR

    double entry(int i, int j) const;
    Vec apply(const Vec& x) const;
    double quadratic_form(const Vec& x) const;
    double bilinear_form(const Vec& x, const Vec& y) const;
    double inf_norm() const;
    int bandwidth() const;

    DenseMatrix to_dense() const;

    // coordinate text format `i j value`, lower triangle
    void write_text(std::ostream& os) const;
    static SymmetricOperator read_text(std::istream& is, int dim);

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& cols() const { return cols_; }
    const std::vector<double>& vals() const { return vals_; }

private:
    int dim_ = 0;
    OperatorKind kind_ = OperatorKind::Stiffness;
    std::shared_ptr<const DofMap> dofmap_;
    bool finalized_ = false;
    std::vector<std::vector<std::pair<int, double>>> build_rows_;
    std::vector<int> row_ptr_, cols_;
    std::vector<double> vals_;
};

template <typename MeshT>
SymmetricOperator assemble_stiffness(const MeshT& mesh, const CoefficientField& coeff,
                                     std::shared_ptr<const DofMap> dofmap);
template <typename MeshT>
SymmetricOperator assemble_weighted_mass(const MeshT& mesh, const DensityField& density,
                                         std::shared_ptr<const DofMap> dofmap);
template <typename MeshT>
SymmetricOperator assemble_plain_mass(const MeshT& mesh, std::shared_ptr<const DofMap> dofmap);

/// The linear functionals of the cell problems: l_j(v) = sum_k int a_kj d_k v
/// and l_0(v) = int rho v, as vectors over dofs.
struct CellFunctionals {
    Vec l1, l2, l0;
};
CellFunctionals assemble_functionals(const CellMesh& mesh, const CoefficientField& coeff,
                                     const DensityField& density,
                                     std::shared_ptr<const DofMap> dofmap);

/// P1 integration weights w_r = int_{Y*} phi_r, accumulated over periodic replicas.
template <typename MeshT>
Vec integration_weights(const MeshT& mesh, const DofMap& dofmap);

/// Solve K x = rhs subject to the mean-zero constraint w^T x = 0 through a
/// single bordered multiplier row (dense LU; cell problems are desk-sized).
Vec solve_mean_zero(const SymmetricOperator& stiffness, const Vec& weights, const Vec& rhs);

} // namespace perfhom
