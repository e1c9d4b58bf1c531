#include "perfhom/assembly.hpp"

#include "perfhom/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

namespace perfhom {

DofMap build_periodic_dofmap(const CellMesh& mesh, bool mean_zero) {
    DofMap dm;
    dm.mean_zero = mean_zero;
    const int nv = mesh.vertex_count();
    dm.vertex_to_dof.assign(static_cast<std::size_t>(nv), -1);
    dm.kinds.assign(static_cast<std::size_t>(nv), VertexConstraint::Free);
    int nd = 0;
    for (int v = 0; v < nv; ++v) {
        if (mesh.periodic_partner[static_cast<std::size_t>(v)] == v) {
            dm.vertex_to_dof[static_cast<std::size_t>(v)] = nd++;
        } else {
            dm.kinds[static_cast<std::size_t>(v)] = VertexConstraint::PeriodicReplica;
        }
    }
    for (int v = 0; v < nv; ++v) {
        if (dm.vertex_to_dof[static_cast<std::size_t>(v)] < 0) {
            dm.vertex_to_dof[static_cast<std::size_t>(v)] =
                dm.vertex_to_dof[static_cast<std::size_t>(mesh.periodic_partner[static_cast<std::size_t>(v)])];
        }
    }
    dm.n_dofs = nd;
    return dm;
}

DofMap build_dirichlet_dofmap(const DomainMesh& mesh) {
    DofMap dm;
    const int nv = mesh.vertex_count();
    dm.vertex_to_dof.assign(static_cast<std::size_t>(nv), -1);
    dm.kinds.assign(static_cast<std::size_t>(nv), VertexConstraint::Free);
    std::set<int> bnd(mesh.dirichlet_boundary.begin(), mesh.dirichlet_boundary.end());
    int nd = 0;
    for (int v = 0; v < nv; ++v) {
        if (bnd.count(v)) {
            dm.kinds[static_cast<std::size_t>(v)] = VertexConstraint::DirichletEliminated;
        } else {
            dm.vertex_to_dof[static_cast<std::size_t>(v)] = nd++;
        }
    }
    dm.n_dofs = nd;
    return dm;
}

DofMap build_free_dofmap(int vertex_count) {
    DofMap dm;
    dm.n_dofs = vertex_count;
    dm.vertex_to_dof.resize(static_cast<std::size_t>(vertex_count));
    dm.kinds.assign(static_cast<std::size_t>(vertex_count), VertexConstraint::Free);
    for (int v = 0; v < vertex_count; ++v) dm.vertex_to_dof[static_cast<std::size_t>(v)] = v;
    return dm;
}

SymmetricOperator::SymmetricOperator(int dim, OperatorKind kind,
                                     std::shared_ptr<const DofMap> dofmap)
    : dim_(dim), kind_(kind), dofmap_(std::move(dofmap)) {
    build_rows_.resize(static_cast<std::size_t>(dim));
}

void SymmetricOperator::add(int i, int j, double v) {
    auto& row = build_rows_[static_cast<std::size_t>(i)];
    for (auto& [c, val] : row) {
        if (c == j) {
            val += v;
            return;
        }
    }
    row.emplace_back(j, v);
}

void SymmetricOperator::finalize() {
    row_ptr_.assign(static_cast<std::size_t>(dim_) + 1, 0);
    std::size_t nnz = 0;
    for (auto& row : build_rows_) {
        std::sort(row.begin(), row.end());
        nnz += row.size();
    }
    cols_.reserve(nnz);
    vals_.reserve(nnz);
    for (int i = 0; i < dim_; ++i) {
        for (auto& [c, v] : build_rows_[static_cast<std::size_t>(i)]) {
            cols_.push_back(c);
            vals_.push_back(v);
        }
        row_ptr_[static_cast<std::size_t>(i) + 1] = static_cast<int>(cols_.size());
    }
    build_rows_.clear();
    build_rows_.shrink_to_fit();
    finalized_ = true;
}

double SymmetricOperator::entry(int i, int j) const {
    for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
        if (cols_[static_cast<std::size_t>(k)] == j) return vals_[static_cast<std::size_t>(k)];
    }
    return 0.0;
}

Vec SymmetricOperator::apply(const Vec& x) const {
    Vec y(static_cast<std::size_t>(dim_), 0.0);
    for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
            acc += vals_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(cols_[static_cast<std::size_t>(k)])];
        }
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

double SymmetricOperator::quadratic_form(const Vec& x) const { return bilinear_form(x, x); }

double SymmetricOperator::bilinear_form(const Vec& x, const Vec& y) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
            acc += vals_[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(cols_[static_cast<std::size_t>(k)])];
        }
        s += x[static_cast<std::size_t>(i)] * acc;
    }
    return s;
}

double SymmetricOperator::inf_norm() const {
    double best = 0.0;
    for (int i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
            s += std::abs(vals_[static_cast<std::size_t>(k)]);
        }
        best = std::max(best, s);
    }
    return best;
}

int SymmetricOperator::bandwidth() const {
    int bw = 0;
    for (int i = 0; i < dim_; ++i) {
        for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
            bw = std::max(bw, std::abs(i - cols_[static_cast<std::size_t>(k)]));
        }
    }
    return bw;
}

DenseMatrix SymmetricOperator::to_dense() const {
    DenseMatrix m(dim_, dim_);
    for (int i = 0; i < dim_; ++i) {
        for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
            m(i, cols_[static_cast<std::size_t>(k)]) = vals_[static_cast<std::size_t>(k)];
        }
    }
    return m;
}

void SymmetricOperator::write_text(std::ostream& os) const {
    for (int i = 0; i < dim_; ++i) {
        for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
            int j = cols_[static_cast<std::size_t>(k)];
            if (j > i) continue;
            os << i << " " << j << " " << vals_[static_cast<std::size_t>(k)] << "\n";
        }
    }
}

SymmetricOperator SymmetricOperator::read_text(std::istream& is, int dim) {
    SymmetricOperator op(dim, OperatorKind::Stiffness, nullptr);
    int i, j;
    double v;
    while (is >> i >> j >> v) {
        op.add(i, j, v);
        if (i != j) op.add(j, i, v);
    }
    op.finalize();
    return op;
}

namespace {

struct TriGeom {
    double area;
    std::array<std::array<double, 2>, 3> grad;
};

template <typename MeshT>
TriGeom tri_geometry(const MeshT& mesh, std::size_t t) {
    const Tri& tri = mesh.triangles[t];
    const Point& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Point& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Point& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
    double det = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
    TriGeom g;
    g.area = 0.5 * det;
    g.grad[0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
    g.grad[1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
    g.grad[2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
    return g;
}

void check_sizes(std::size_t field_elems, std::size_t mesh_elems, const char* what) {
    if (field_elems != mesh_elems) {
        throw ValidationError(std::string(what) + ": field has " + std::to_string(field_elems) +
                              " elements, mesh has " + std::to_string(mesh_elems));
    }
}

} // namespace

template <typename MeshT>
SymmetricOperator assemble_stiffness(const MeshT& mesh, const CoefficientField& coeff,
                                     std::shared_ptr<const DofMap> dofmap) {
    check_sizes(coeff.values.size(), mesh.triangles.size(), "assemble_stiffness");
    SymmetricOperator op(dofmap->n_dofs, OperatorKind::Stiffness, dofmap);
    // deterministic traversal; element matrix built on the upper triangle and
    // mirrored so stored symmetry is exact
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        TriGeom g = tri_geometry(mesh, t);
        const Tensor2& a = coeff.values[t];
        const Tri& tri = mesh.triangles[t];
        double ke[3][3];
        for (int r = 0; r < 3; ++r) {
            for (int c = r; c < 3; ++c) {
                double gx = g.grad[static_cast<std::size_t>(r)][0];
                double gy = g.grad[static_cast<std::size_t>(r)][1];
                double hx = g.grad[static_cast<std::size_t>(c)][0];
                double hy = g.grad[static_cast<std::size_t>(c)][1];
                double v = g.area * (a.a11 * gx * hx + a.a12 * (gx * hy + gy * hx) + a.a22 * gy * hy);
                ke[r][c] = v;
                ke[c][r] = v;
            }
        }
        for (int r = 0; r < 3; ++r) {
            int dr = dofmap->dof(tri[r]);
            if (dr < 0) continue;
            for (int c = 0; c < 3; ++c) {
                int dc = dofmap->dof(tri[c]);
                if (dc < 0) continue;
                op.add(dr, dc, ke[r][c]);
            }
        }
    }
    op.finalize();
    return op;
}

namespace {

template <typename MeshT>
SymmetricOperator assemble_mass_impl(const MeshT& mesh, const std::vector<double>* weight,
                                     OperatorKind kind, std::shared_ptr<const DofMap> dofmap) {
    SymmetricOperator op(dofmap->n_dofs, kind, dofmap);
    static const double loc[3][3] = {{2, 1, 1}, {1, 2, 1}, {1, 1, 2}};
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        double f = mesh.areas[t] / 12.0 * (weight ? (*weight)[t] : 1.0);
        const Tri& tri = mesh.triangles[t];
        for (int r = 0; r < 3; ++r) {
            int dr = dofmap->dof(tri[r]);
            if (dr < 0) continue;
            for (int c = 0; c < 3; ++c) {
                int dc = dofmap->dof(tri[c]);
                if (dc < 0) continue;
                op.add(dr, dc, f * loc[r][c]);
            }
        }
    }
    op.finalize();
    return op;
}

} // namespace

template <typename MeshT>
SymmetricOperator assemble_weighted_mass(const MeshT& mesh, const DensityField& density,
                                         std::shared_ptr<const DofMap> dofmap) {
    check_sizes(density.values.size(), mesh.triangles.size(), "assemble_weighted_mass");
    return assemble_mass_impl(mesh, &density.values, OperatorKind::WeightedMass, std::move(dofmap));
}

template <typename MeshT>
SymmetricOperator assemble_plain_mass(const MeshT& mesh, std::shared_ptr<const DofMap> dofmap) {
    return assemble_mass_impl(mesh, nullptr, OperatorKind::PlainMass, std::move(dofmap));
}

CellFunctionals assemble_functionals(const CellMesh& mesh, const CoefficientField& coeff,
                                     const DensityField& density,
                                     std::shared_ptr<const DofMap> dofmap) {
    check_sizes(coeff.values.size(), mesh.triangles.size(), "assemble_functionals");
    check_sizes(density.values.size(), mesh.triangles.size(), "assemble_functionals");
    CellFunctionals f;
    f.l1.assign(static_cast<std::size_t>(dofmap->n_dofs), 0.0);
    f.l2.assign(static_cast<std::size_t>(dofmap->n_dofs), 0.0);
    f.l0.assign(static_cast<std::size_t>(dofmap->n_dofs), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        TriGeom g = tri_geometry(mesh, t);
        const Tensor2& a = coeff.values[t];
        const Tri& tri = mesh.triangles[t];
        for (int r = 0; r < 3; ++r) {
            int dr = dofmap->dof(tri[r]);
            if (dr < 0) continue;
            double gx = g.grad[static_cast<std::size_t>(r)][0];
            double gy = g.grad[static_cast<std::size_t>(r)][1];
            // (a grad phi_r)_j = sum_k a_kj d_k phi_r
            f.l1[static_cast<std::size_t>(dr)] += g.area * (a.a11 * gx + a.a12 * gy);
            f.l2[static_cast<std::size_t>(dr)] += g.area * (a.a12 * gx + a.a22 * gy);
            f.l0[static_cast<std::size_t>(dr)] += density.values[t] * g.area / 3.0;
        }
    }
    return f;
}

template <typename MeshT>
Vec integration_weights(const MeshT& mesh, const DofMap& dofmap) {
    Vec w(static_cast<std::size_t>(dofmap.n_dofs), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (int r = 0; r < 3; ++r) {
            int dr = dofmap.dof(mesh.triangles[t][r]);
            if (dr < 0) continue;
            w[static_cast<std::size_t>(dr)] += mesh.areas[t] / 3.0;
        }
    }
    return w;
}

Vec solve_mean_zero(const SymmetricOperator& stiffness, const Vec& weights, const Vec& rhs) {
    const int n = stiffness.dim();
    if (static_cast<int>(weights.size()) != n || static_cast<int>(rhs.size()) != n) {
        throw ValidationError("solve_mean_zero: dimension mismatch");
    }
    DenseMatrix m(n + 1, n + 1);
    DenseMatrix k = stiffness.to_dense();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = k(i, j);
        m(i, n) = weights[static_cast<std::size_t>(i)];
        m(n, i) = weights[static_cast<std::size_t>(i)];
    }
    Vec b(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)];
    Vec x = lu_solve(std::move(m), std::move(b));
    x.resize(static_cast<std::size_t>(n));
    // a violated constraint means a singular bordered system (broken mesh/dofmap)
    double mean = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i) {
        mean += weights[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        scale = std::max(scale, std::abs(x[static_cast<std::size_t>(i)]));
    }
    if (!(std::abs(mean) <= 1e-10 * (1.0 + scale))) {
        throw SolverError("solve_mean_zero: constraint residual " + std::to_string(mean));
    }
    return x;
}

// explicit instantiations
template SymmetricOperator assemble_stiffness<CellMesh>(const CellMesh&, const CoefficientField&,
                                                        std::shared_ptr<const DofMap>);
template SymmetricOperator assemble_stiffness<DomainMesh>(const DomainMesh&, const CoefficientField&,
                                                          std::shared_ptr<const DofMap>);
template SymmetricOperator assemble_weighted_mass<CellMesh>(const CellMesh&, const DensityField&,
                                                            std::shared_ptr<const DofMap>);
template SymmetricOperator assemble_weighted_mass<DomainMesh>(const DomainMesh&, const DensityField&,
                                                              std::shared_ptr<const DofMap>);
template SymmetricOperator assemble_plain_mass<CellMesh>(const CellMesh&, std::shared_ptr<const DofMap>);
template SymmetricOperator assemble_plain_mass<DomainMesh>(const DomainMesh&, std::shared_ptr<const DofMap>);
template Vec integration_weights<CellMesh>(const CellMesh&, const DofMap&);
template Vec integration_weights<DomainMesh>(const DomainMesh&, const DofMap&);

} // namespace perfhom
