#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "perfhom/assembly.hpp"
#include "perfhom/densela.hpp"
#include "perfhom/errors.hpp"

#include <cmath>
#include <memory>
#include <sstream>

using namespace perfhom;

namespace {

// one reference triangle {(0,0),(1,0),(0,1)} packaged as a CellMesh-shaped object
CellMesh reference_triangle() {
    CellMesh m;
    m.m = 1;
    m.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    m.triangles = {Tri{{0, 1, 2}}};
    m.areas = {0.5};
    m.periodic_partner = {0, 1, 2};
    m.solid_area = 0.5;
    m.grid_to_vertex = {0, 1, 2, -1};
    m.triangle_square = {{0, 0, 0}};
    return m;
}

} // namespace

TEST_CASE("P1 stiffness element matrix on the reference triangle") {
    CellMesh m = reference_triangle();
    auto dm = std::make_shared<DofMap>(build_free_dofmap(3));
    CoefficientField id;
    id.preset = "identity";
    id.alpha = 1.0;
    id.values = {Tensor2{1.0, 0.0, 1.0}};
    SymmetricOperator k = assemble_stiffness(m, id, dm);
    CHECK(k.entry(0, 0) == doctest::Approx(1.0));
    CHECK(k.entry(0, 1) == doctest::Approx(-0.5));
    CHECK(k.entry(0, 2) == doctest::Approx(-0.5));
    CHECK(k.entry(1, 1) == doctest::Approx(0.5));
    CHECK(k.entry(1, 2) == doctest::Approx(0.0));
    CHECK(k.entry(2, 2) == doctest::Approx(0.5));
}

TEST_CASE("P1 weighted-mass element block on the reference triangle") {
    CellMesh m = reference_triangle();
    auto dm = std::make_shared<DofMap>(build_free_dofmap(3));
    DensityField rho;
    rho.values = {1.0};
    rho.average = 0.5;
    SymmetricOperator b = assemble_weighted_mass(m, rho, dm);
    CHECK(b.entry(0, 0) == doctest::Approx(2.0 / 24.0));
    CHECK(b.entry(0, 1) == doctest::Approx(1.0 / 24.0));
    CHECK(b.entry(1, 1) == doctest::Approx(2.0 / 24.0));
}

TEST_CASE("periodic stiffness kernel contains constants") {
    CellMesh mesh = build_cell_mesh(CellGeometry::no_hole(8));
    auto dm = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    CoefficientField id = preset_coefficients("identity", mesh);
    SymmetricOperator k = assemble_stiffness(mesh, id, dm);
    Vec ones(static_cast<std::size_t>(dm->n_dofs), 1.0);
    Vec r = k.apply(ones);
    double mx = 0.0;
    for (double v : r) mx = std::max(mx, std::abs(v));
    CHECK(mx < 1e-13);
}

TEST_CASE("periodic cell stiffness has a one-dimensional kernel (oracle rank)") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    auto dm = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    CoefficientField id = preset_coefficients("identity", mesh);
    SymmetricOperator k = assemble_stiffness(mesh, id, dm);
    EigResult eig = dense_eig_oracle(k.to_dense());
    int zero_count = 0;
    for (double v : eig.values) {
        if (std::abs(v) < 1e-10) ++zero_count;
    }
    CHECK(zero_count == 1);
    CHECK(eig.values[1] > 1e-8); // spectral gap above the constants
}

TEST_CASE("Dirichlet stiffness is positive definite (oracle eigenvalues)") {
    DomainMesh mesh = build_domain_mesh(1, 8, CellGeometry::square_hole(8));
    auto dm = std::make_shared<DofMap>(build_dirichlet_dofmap(mesh));
    CoefficientField id = preset_coefficients("identity", mesh);
    SymmetricOperator k = assemble_stiffness(mesh, id, dm);
    EigResult eig = dense_eig_oracle(k.to_dense());
    CHECK(eig.values.front() > 0.0);
}

TEST_CASE("assembled symmetry is exact and layered scales element-wise") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    auto dm = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    CoefficientField lay = preset_coefficients("layered", mesh);
    SymmetricOperator k = assemble_stiffness(mesh, lay, dm);
    CHECK(k.to_dense().max_asymmetry() == 0.0);

    // layered = identity scaled per element: rebuild via scaled identity fields
    CoefficientField manual;
    manual.preset = "manual";
    manual.alpha = lay.alpha;
    manual.values.resize(lay.values.size());
    for (std::size_t t = 0; t < lay.values.size(); ++t) {
        manual.values[t] = Tensor2{lay.values[t].a11, 0.0, lay.values[t].a11};
    }
    SymmetricOperator k2 = assemble_stiffness(mesh, manual, dm);
    DenseMatrix d1 = k.to_dense(), d2 = k2.to_dense();
    double diff = 0.0;
    for (int i = 0; i < d1.rows(); ++i)
        for (int j = 0; j < d1.cols(); ++j) diff = std::max(diff, std::abs(d1(i, j) - d2(i, j)));
    CHECK(diff == 0.0);
}

TEST_CASE("1^T B 1 equals the density average") {
    for (const char* preset : {"positive_avg", "zero_avg", "negative_avg"}) {
        CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
        auto dm = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
        DensityField rho = preset_density(preset, mesh);
        SymmetricOperator b = assemble_weighted_mass(mesh, rho, dm);
        Vec ones(static_cast<std::size_t>(dm->n_dofs), 1.0);
        CHECK(std::abs(b.quadratic_form(ones) - rho.average) < 1e-13);
    }
}

TEST_CASE("functionals: l_j vanishes on periodic test functions for constant coefficients") {
    CellMesh mesh = build_cell_mesh(CellGeometry::no_hole(8));
    auto dm = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    CoefficientField id = preset_coefficients("identity", mesh);
    DensityField rho = preset_density("zero_avg", mesh);
    CellFunctionals f = assemble_functionals(mesh, id, rho, dm);
    // l_j(v) = int d_j v = 0 for every periodic v; check against a few dof vectors
    Vec probe(static_cast<std::size_t>(dm->n_dofs), 0.0);
    for (std::size_t i = 0; i < probe.size(); i += 7) probe[i] = 1.0 + 0.1 * static_cast<double>(i % 5);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        s1 += f.l1[i] * probe[i];
        s2 += f.l2[i] * probe[i];
    }
    CHECK(std::abs(s1) < 1e-13);
    CHECK(std::abs(s2) < 1e-13);

    // l_0(1) = M
    double s0 = 0.0;
    for (double v : f.l0) s0 += v;
    CHECK(std::abs(s0 - rho.average) < 1e-14);
}

TEST_CASE("l_0 against a direct quadrature oracle for v = y1 - 1/2") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    auto dm = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    CoefficientField id = preset_coefficients("identity", mesh);
    DensityField rho = preset_density("zero_avg", mesh);
    CellFunctionals f = assemble_functionals(mesh, id, rho, dm);
    // dof vector of the interpolant of v(y) = y1 - 1/2 (periodic replicas share
    // the master's value, consistent with the master's coordinate)
    Vec v(static_cast<std::size_t>(dm->n_dofs), 0.0);
    for (int w = 0; w < mesh.vertex_count(); ++w) {
        if (mesh.periodic_partner[static_cast<std::size_t>(w)] != w) continue;
        v[static_cast<std::size_t>(dm->dof(w))] = mesh.vertices[static_cast<std::size_t>(w)].x - 0.5;
    }
    double got = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) got += f.l0[i] * v[i];
    // direct per-element quadrature: rho is elementwise constant, v is P1
    double oracle = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Tri& tri = mesh.triangles[t];
        double centroid = 0.0;
        for (int r = 0; r < 3; ++r) {
            double x = mesh.vertices[static_cast<std::size_t>(tri[r])].x;
            centroid += (x - 0.5) / 3.0;
        }
        oracle += rho.values[t] * mesh.areas[t] * centroid;
    }
    CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(got < 0.0); // rho = +1 where v < 0
}

TEST_CASE("mean-zero solve keeps the constraint and solves the system") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    auto dm = std::make_shared<DofMap>(build_periodic_dofmap(mesh, true));
    CoefficientField id = preset_coefficients("identity", mesh);
    SymmetricOperator k = assemble_stiffness(mesh, id, dm);
    Vec w = integration_weights(mesh, *dm);
    DensityField rho = preset_density("zero_avg", mesh);
    CellFunctionals f = assemble_functionals(mesh, id, rho, dm);
    Vec x = solve_mean_zero(k, w, f.l0);
    double mean = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mean += w[i] * x[i];
    CHECK(std::abs(mean) < 1e-12);
    // residual K x + mu w = l0 for some multiplier mu
    Vec r = k.apply(x);
    double mu = (r[0] - f.l0[0]) / w[0];
    double res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        res = std::max(res, std::abs(r[i] + mu * w[i] - f.l0[i]));
    }
    CHECK(res < 1e-10);
}

TEST_CASE("matrix text round trip") {
    CellMesh m = reference_triangle();
    auto dm = std::make_shared<DofMap>(build_free_dofmap(3));
    CoefficientField id;
    id.preset = "identity";
    id.alpha = 1.0;
    id.values = {Tensor2{1.0, 0.0, 1.0}};
    SymmetricOperator k = assemble_stiffness(m, id, dm);
    std::stringstream ss;
    k.write_text(ss);
    SymmetricOperator k2 = SymmetricOperator::read_text(ss, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(k.entry(i, j) == doctest::Approx(k2.entry(i, j)));
}

TEST_CASE("size mismatches are rejected") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    auto dm = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    CoefficientField wrong;
    wrong.values = {Tensor2{1.0, 0.0, 1.0}};
    wrong.alpha = 1.0;
    CHECK_THROWS_AS(assemble_stiffness(mesh, wrong, dm), ValidationError);
}
