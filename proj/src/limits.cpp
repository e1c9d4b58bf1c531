#include "perfhom/limits.hpp"

#include "perfhom/errors.hpp"

#include <cmath>

namespace perfhom {

namespace {

struct LimitGrid {
    std::shared_ptr<const DomainMesh> mesh;
    std::shared_ptr<const DofMap> dofmap;
    SymmetricOperator stiffness;
    SymmetricOperator mass;
};

LimitGrid limit_grid(const Tensor2& q, int grid) {
    if (grid < 2) throw ValidationError("limit grid must be at least 2");
    LimitGrid g;
    g.mesh = std::make_shared<DomainMesh>(
        build_domain_mesh(1, grid, CellGeometry::no_hole(std::max(grid, 8)), 4 * (grid + 1) * (grid + 1)));
    g.dofmap = std::make_shared<DofMap>(build_dirichlet_dofmap(*g.mesh));
    CoefficientField cf;
    cf.preset = "constant";
    cf.alpha = q.min_eigenvalue();
    cf.values.assign(g.mesh->triangles.size(), q);
    g.stiffness = assemble_stiffness(*g.mesh, cf, g.dofmap);
    g.mass = assemble_plain_mass(*g.mesh, g.dofmap);
    return g;
}

void scale_to_l2(const SymmetricOperator& mass, Vec& u, double target_sq) {
    double n2 = mass.quadratic_form(u);
    double s = std::sqrt(target_sq / n2);
    for (double& v : u) v *= s;
}

} // namespace

LimitSolution limit_positive(const Tensor2& q, double m_avg, int count, int grid, int dense_budget) {
    if (!(q.min_eigenvalue() > 0.0)) throw ValidationError("limit_positive: q must be SPD");
    if (!(m_avg > 0.0)) throw ValidationError("limit_positive: M must be positive");
    LimitGrid g = limit_grid(q, grid);
    SpdEigenpairs ep = solve_spd_pencil(g.stiffness, g.mass, count, dense_budget);

    LimitSolution out;
    out.kind = LimitSolution::Kind::PositiveLimit;
    out.grid = grid;
    out.mesh = g.mesh;
    out.dofmap = g.dofmap;
    out.mu = ep.lambda;
    out.cluster = ep.cluster;
    out.mass_scale = m_avg;
    for (int k = 0; k < count; ++k) {
        out.eigenvalues.push_back(ep.lambda[static_cast<std::size_t>(k)] / m_avg);
        Vec u = std::move(ep.vectors[static_cast<std::size_t>(k)]);
        scale_to_l2(g.mass, u, 1.0 / m_avg);
        out.eigenfunctions.push_back(std::move(u));
    }
    return out;
}

LimitSolution limit_negative(const Tensor2& q_tilde, double m_tilde, int count, int grid,
                             int dense_budget) {
    if (!(q_tilde.min_eigenvalue() > 0.0)) throw ValidationError("limit_negative: q_tilde must be SPD");
    if (!(m_tilde < 0.0)) throw ValidationError("limit_negative: M_tilde must be negative");
    LimitGrid g = limit_grid(q_tilde, grid);
    SpdEigenpairs ep = solve_spd_pencil(g.stiffness, g.mass, count, dense_budget);

    LimitSolution out;
    out.kind = LimitSolution::Kind::NegativeLimit;
    out.grid = grid;
    out.mesh = g.mesh;
    out.dofmap = g.dofmap;
    out.mu = ep.lambda;
    out.cluster = ep.cluster;
    out.mass_scale = m_tilde;
    for (int k = 0; k < count; ++k) {
        double xi = ep.lambda[static_cast<std::size_t>(k)] / m_tilde; // 0 > xi_1 > xi_2 >= ...
        if (!(xi < 0.0)) throw SolverError("limit_negative produced a nonnegative eigenvalue");
        out.eigenvalues.push_back(xi);
        Vec v = std::move(ep.vectors[static_cast<std::size_t>(k)]);
        scale_to_l2(g.mass, v, -1.0 / m_tilde);
        out.eigenfunctions.push_back(std::move(v));
    }
    return out;
}

LimitSolution limit_pencil(const Tensor2& q, double nu2, int count, int grid, int dense_budget) {
    if (!(q.min_eigenvalue() > 0.0)) throw ValidationError("limit_pencil: q must be SPD");
    if (!(nu2 > 0.0)) throw ValidationError("limit_pencil: nu^2 must be positive");
    LimitGrid g = limit_grid(q, grid);
    SpdEigenpairs ep = solve_spd_pencil(g.stiffness, g.mass, count, dense_budget);

    LimitSolution out;
    out.kind = LimitSolution::Kind::PencilLimit;
    out.grid = grid;
    out.mesh = g.mesh;
    out.dofmap = g.dofmap;
    out.mu = ep.lambda;
    out.cluster = ep.cluster;
    out.nu = std::sqrt(nu2);
    for (int k = 0; k < count; ++k) {
        double mu = ep.lambda[static_cast<std::size_t>(k)];
        double lp = std::sqrt(mu) / out.nu; // lambda^{k,+}; the branch pair is -lp
        out.eigenvalues.push_back(lp);
        Vec u = std::move(ep.vectors[static_cast<std::size_t>(k)]);
        scale_to_l2(g.mass, u, 1.0 / (std::sqrt(mu) * out.nu)); // (2.291), same value both branches
        out.eigenfunctions.push_back(std::move(u));
    }
    return out;
}

// ---------------- corrector sampler ----------------

CorrectorSampler::CorrectorSampler(const HomogenizedModel& model, const LimitSolution& limit, int k,
                                   bool pencil_branch_positive) {
    limit_mesh_ = limit.mesh;
    const Vec& u = limit.eigenfunctions.at(static_cast<std::size_t>(k - 1));
    u0_vertex_ = vertex_values(*limit.dofmap, u);
    du0_.resize(limit.mesh->triangles.size());
    for (std::size_t t = 0; t < limit.mesh->triangles.size(); ++t) {
        du0_[t] = triangle_gradient(*limit.mesh, t, u0_vertex_);
    }

    filled_cell_ = std::make_shared<CellMesh>(build_cell_mesh(CellGeometry::no_hole(model.mesh->m)));
    auto fill_grads = [&](const Vec& dof_field, std::vector<std::array<double, 2>>& out) {
        Vec vertex = vertex_values(*model.dofmap, dof_field);
        CellFactor filled = CellFactor::from_cell_vertex_field(*model.mesh, vertex);
        out.resize(filled_cell_->triangles.size());
        for (std::size_t t = 0; t < filled_cell_->triangles.size(); ++t) {
            out[t] = triangle_gradient(*filled_cell_, t, filled.values);
        }
    };
    fill_grads(model.chi1, dchi1_);
    fill_grads(model.chi2, dchi2_);

    if (limit.kind == LimitSolution::Kind::PencilLimit) {
        if (!model.chi0) throw ValidationError("corrector: pencil regime needs chi^0 in the model");
        fill_grads(*model.chi0, dchi0_);
        has_lambda_term_ = true;
        lambda0_ = pencil_branch_positive ? limit.eigenvalues[static_cast<std::size_t>(k - 1)]
                                          : -limit.eigenvalues[static_cast<std::size_t>(k - 1)];
    } else if (limit.kind == LimitSolution::Kind::NegativeLimit) {
        // weighted-problem corrector (3.50): uses chi_tilde
        if (!model.chi_tilde1 || !model.chi_tilde2) {
            throw ValidationError("corrector: negative regime needs chi_tilde in the model");
        }
        fill_grads(*model.chi_tilde1, dchi1_);
        fill_grads(*model.chi_tilde2, dchi2_);
    }
}

int CorrectorSampler::locate(double x, double y) const {
    const int g = limit_mesh_->N;
    int i = std::min(static_cast<int>(x * g), g - 1);
    int j = std::min(static_cast<int>(y * g), g - 1);
    double fx = x * g - i, fy = y * g - j;
    int half = (fx >= fy) ? 0 : 1;
    return 2 * (j * g + i) + half;
}

double CorrectorSampler::u0_at(double x, double y) const {
    int t = locate(x, y);
    const Tri& tri = limit_mesh_->triangles[static_cast<std::size_t>(t)];
    const Point& p0 = limit_mesh_->vertices[static_cast<std::size_t>(tri[0])];
    const Point& p1 = limit_mesh_->vertices[static_cast<std::size_t>(tri[1])];
    const Point& p2 = limit_mesh_->vertices[static_cast<std::size_t>(tri[2])];
    double det = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
    double l1 = ((x - p0.x) * (p2.y - p0.y) - (y - p0.y) * (p2.x - p0.x)) / det;
    double l2 = ((p1.x - p0.x) * (y - p0.y) - (p1.y - p0.y) * (x - p0.x)) / det;
    double l0 = 1.0 - l1 - l2;
    return l0 * u0_vertex_[static_cast<std::size_t>(tri[0])] +
           l1 * u0_vertex_[static_cast<std::size_t>(tri[1])] +
           l2 * u0_vertex_[static_cast<std::size_t>(tri[2])];
}

std::array<double, 2> CorrectorSampler::du0_at(double x, double y) const {
    return du0_[static_cast<std::size_t>(locate(x, y))];
}

std::array<double, 2> CorrectorSampler::corrector_gradient(double x, double y,
                                                           int filled_cell_triangle) const {
    auto g0 = du0_at(x, y);
    const auto& g1 = dchi1_[static_cast<std::size_t>(filled_cell_triangle)];
    const auto& g2 = dchi2_[static_cast<std::size_t>(filled_cell_triangle)];
    std::array<double, 2> gy{-(g0[0] * g1[0] + g0[1] * g2[0]), -(g0[0] * g1[1] + g0[1] * g2[1])};
    if (has_lambda_term_) {
        double u0 = u0_at(x, y);
        const auto& gc = dchi0_[static_cast<std::size_t>(filled_cell_triangle)];
        gy[0] += lambda0_ * u0 * gc[0];
        gy[1] += lambda0_ * u0 * gc[1];
    }
    return gy;
}

OrthonormalityReport limit_orthonormality_check(const LimitSolution& sol) {
    if (sol.kind != LimitSolution::Kind::PencilLimit) {
        throw ValidationError("orthonormality check applies to the pencil limit");
    }
    const int c = static_cast<int>(sol.eigenfunctions.size());
    SymmetricOperator mass = assemble_plain_mass(*sol.mesh, sol.dofmap);
    OrthonormalityReport rep;
    rep.gram = DenseMatrix(c, c);
    rep.target = DenseMatrix(c, c);
    double nu2 = sol.nu * sol.nu;
    for (int i = 0; i < c; ++i) {
        for (int j = 0; j < c; ++j) {
            rep.gram(i, j) = mass.bilinear_form(sol.eigenfunctions[static_cast<std::size_t>(i)],
                                                sol.eigenfunctions[static_cast<std::size_t>(j)]);
            double li = sol.eigenvalues[static_cast<std::size_t>(i)];
            double lj = sol.eigenvalues[static_cast<std::size_t>(j)];
            rep.target(i, j) = (i == j) ? 2.0 / (nu2 * (li + lj)) : 0.0;
            if (i != j && sol.cluster[static_cast<std::size_t>(i)] == sol.cluster[static_cast<std::size_t>(j)]) {
                // degenerate pair: the subspace Gram target is the same scaled
                // identity; off-diagonals stay zero
                rep.target(i, j) = 0.0;
            }
            rep.max_abs_deviation =
                std::max(rep.max_abs_deviation, std::abs(rep.gram(i, j) - rep.target(i, j)));
        }
    }
    return rep;
}

} // namespace perfhom
