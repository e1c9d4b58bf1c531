#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "perfhom/cell.hpp"
#include "perfhom/errors.hpp"

#include <cmath>
#include <memory>

using namespace perfhom;

namespace {

// reference values computed with an independent implementation of the same
// discrete problems (structured P1, exact piecewise-constant data)
constexpr double kQStar8 = 0.891367566298;
constexpr double kQStar16 = 0.880371205287;
constexpr double kQStar32 = 0.875504881131;
constexpr double kLambda1Neg8 = -11.3812309911;
constexpr double kNu2_8 = 0.020992875812;
constexpr double kMTilde8 = -0.3628323765;

// 1D periodic two-point oracle for the layered corrector: per-column averaged
// coefficients, flux constant c = harmonic mean
struct Layered1D {
    Vec abar;   // per column
    double hm;  // harmonic mean
};
Layered1D layered_column_averages(const CellMesh& mesh, const CoefficientField& coeff) {
    Layered1D out;
    out.abar.assign(static_cast<std::size_t>(mesh.m), 0.0);
    Vec area(static_cast<std::size_t>(mesh.m), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        int col = mesh.triangle_square[t][0];
        out.abar[static_cast<std::size_t>(col)] += coeff.values[t].a11 * mesh.areas[t];
        area[static_cast<std::size_t>(col)] += mesh.areas[t];
    }
    double inv = 0.0;
    for (std::size_t c = 0; c < out.abar.size(); ++c) {
        out.abar[c] /= area[c];
        inv += 1.0 / out.abar[c];
    }
    out.hm = static_cast<double>(mesh.m) / inv;
    return out;
}

} // namespace

TEST_CASE("no hole, identity coefficients: correctors vanish, q = Id") {
    CellMesh mesh = build_cell_mesh(CellGeometry::no_hole(8));
    CoefficientField id = preset_coefficients("identity", mesh);
    Vec c1 = solve_cell_corrector(mesh, id, 1);
    Vec c2 = solve_cell_corrector(mesh, id, 2);
    for (double v : c1) CHECK(std::abs(v) < 1e-12);
    for (double v : c2) CHECK(std::abs(v) < 1e-12);
    Tensor2 q = homogenized_tensor(mesh, id, c1, c2);
    CHECK(q.a11 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(q.a22 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(q.a12) < 1e-13);
}

TEST_CASE("layered no hole: 1D reduction oracle for chi and q") {
    CellMesh mesh = build_cell_mesh(CellGeometry::no_hole(16));
    CoefficientField lay = preset_coefficients("layered", mesh);
    Vec c1 = solve_cell_corrector(mesh, lay, 1);
    Vec c2 = solve_cell_corrector(mesh, lay, 2);
    DofMap dm = build_periodic_dofmap(mesh, false);

    // chi^2 = 0 and chi^1 depends on y1 only
    for (double v : c2) CHECK(std::abs(v) < 1e-10);
    Vec vv = vertex_values(dm, c1);
    for (int j = 0; j <= mesh.m; ++j) {
        for (int i = 0; i <= mesh.m; ++i) {
            int v = mesh.grid_vertex(i, j);
            int v0 = mesh.grid_vertex(i, 0);
            CHECK(std::abs(vv[static_cast<std::size_t>(v)] - vv[static_cast<std::size_t>(v0)]) < 1e-11);
        }
    }
    // 1D two-point oracle: flux a_i (1 - dchi/dy) = harmonic mean per column
    Layered1D oracle = layered_column_averages(mesh, lay);
    for (int i = 0; i < mesh.m; ++i) {
        double d = (vv[static_cast<std::size_t>(mesh.grid_vertex(i + 1, 0))] -
                    vv[static_cast<std::size_t>(mesh.grid_vertex(i, 0))]) * mesh.m;
        double expected = 1.0 - oracle.hm / oracle.abar[static_cast<std::size_t>(i)];
        CHECK(d == doctest::Approx(expected).epsilon(1e-10));
    }
    Tensor2 q = homogenized_tensor(mesh, lay, c1, c2);
    CHECK(q.a11 == doctest::Approx(oracle.hm).epsilon(1e-12));
    CHECK(q.a22 == doctest::Approx(2.0).epsilon(1e-12));
    // and the closed-form continuum values at m = 32+
    CellMesh mesh32 = build_cell_mesh(CellGeometry::no_hole(32));
    CoefficientField lay32 = preset_coefficients("layered", mesh32);
    Tensor2 q32 = homogenized_tensor(mesh32, lay32, solve_cell_corrector(mesh32, lay32, 1),
                                     solve_cell_corrector(mesh32, lay32, 2));
    CHECK(q32.a11 == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("square hole, identity: chi antisymmetric under the cell reflection") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    CoefficientField id = preset_coefficients("identity", mesh);
    Vec c1 = solve_cell_corrector(mesh, id, 1);
    DofMap dm = build_periodic_dofmap(mesh, false);
    Vec vv = vertex_values(dm, c1);
    double mx = 0.0;
    for (double v : vv) mx = std::max(mx, std::abs(v));
    CHECK(mx > 1e-3); // genuinely nonzero
    // chi^1(1 - y1, y2) = -chi^1(y1, y2); replicas share master values
    for (int j = 0; j < mesh.m; ++j) {
        for (int i = 0; i < mesh.m; ++i) {
            int v = mesh.grid_vertex(i, j);
            int w = mesh.grid_vertex(mesh.m - i, j);
            if (v < 0 || w < 0) continue;
            CHECK(std::abs(vv[static_cast<std::size_t>(v)] + vv[static_cast<std::size_t>(w)]) < 1e-10);
        }
    }
}

TEST_CASE("q* self-convergence values and Cauchy property") {
    Vec qs;
    for (int m : {8, 16, 32}) {
        CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(m));
        CoefficientField id = preset_coefficients("identity", mesh);
        Vec c1 = solve_cell_corrector(mesh, id, 1);
        Vec c2 = solve_cell_corrector(mesh, id, 2);
        Tensor2 q = homogenized_tensor(mesh, id, c1, c2);
        CHECK(std::abs(q.a11 - q.a22) < 1e-10); // square symmetry
        CHECK(std::abs(q.a12) < 1e-10);
        qs.push_back(q.a11);
    }
    CHECK(qs[0] == doctest::Approx(kQStar8).epsilon(1e-8));
    CHECK(qs[1] == doctest::Approx(kQStar16).epsilon(1e-8));
    CHECK(qs[2] == doctest::Approx(kQStar32).epsilon(1e-8));
    CHECK(std::abs(qs[1] - qs[2]) < std::abs(qs[0] - qs[1])); // Cauchy decrease
}

TEST_CASE("energy route equals the formula route") {
    for (const char* coeff : {"identity", "layered"}) {
        CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
        CoefficientField cf = preset_coefficients(coeff, mesh);
        Vec c1 = solve_cell_corrector(mesh, cf, 1);
        Vec c2 = solve_cell_corrector(mesh, cf, 2);
        Tensor2 qf = homogenized_tensor(mesh, cf, c1, c2);
        Tensor2 qe = energy_tensor(mesh, cf, c1, c2);
        CHECK(qe.a11 == doctest::Approx(qf.a11).epsilon(1e-8));
        CHECK(qe.a22 == doctest::Approx(qf.a22).epsilon(1e-8));
        CHECK(std::abs(qe.a12 - qf.a12) < 1e-8);
    }
}

TEST_CASE("chi^0: oddness, zero data, and the compatibility guard") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    CoefficientField id = preset_coefficients("identity", mesh);
    DensityField zero_avg = preset_density("zero_avg", mesh);
    Vec chi0 = solve_cell_corrector_rho(mesh, id, zero_avg);
    DofMap dm = build_periodic_dofmap(mesh, false);
    Vec vv = vertex_values(dm, chi0);
    for (int j = 0; j < mesh.m; ++j) {
        for (int i = 0; i < mesh.m; ++i) {
            int v = mesh.grid_vertex(i, j);
            int w = mesh.grid_vertex(mesh.m - i, j);
            if (v < 0 || w < 0 || i == 0) continue;
            CHECK(std::abs(vv[static_cast<std::size_t>(v)] + vv[static_cast<std::size_t>(w)]) < 1e-10);
        }
    }
    DensityField null_rho;
    null_rho.values.assign(mesh.triangles.size(), 0.0);
    null_rho.average = 0.0;
    Vec chi_null = solve_cell_corrector_rho(mesh, id, null_rho);
    for (double v : chi_null) CHECK(std::abs(v) < 1e-13);

    DensityField pos = preset_density("positive_avg", mesh);
    CHECK_THROWS_AS(solve_cell_corrector_rho(mesh, id, pos), ValidationError);
}

TEST_CASE("nu^2: value, identity, scaling, and the degenerate error path") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    CoefficientField id = preset_coefficients("identity", mesh);
    DensityField rho = preset_density("zero_avg", mesh);
    Vec chi0 = solve_cell_corrector_rho(mesh, id, rho);
    double nu2 = nu_squared(mesh, id, chi0, rho);
    CHECK(nu2 == doctest::Approx(kNu2_8).epsilon(1e-8));

    // scaling rho by 2 scales nu^2 by 4
    DensityField rho2 = rho;
    for (double& v : rho2.values) v *= 2.0;
    rho2.average *= 2.0;
    Vec chi0b = solve_cell_corrector_rho(mesh, id, rho2);
    double nu2b = nu_squared(mesh, id, chi0b, rho2);
    CHECK(nu2b == doctest::Approx(4.0 * nu2).epsilon(1e-10));

    DensityField null_rho;
    null_rho.values.assign(mesh.triangles.size(), 0.0);
    null_rho.average = 0.0;
    Vec chi_null = solve_cell_corrector_rho(mesh, id, null_rho);
    CHECK_THROWS_AS(nu_squared(mesh, id, chi_null, null_rho), SolverError);
}

TEST_CASE("local spectrum: frozen value, positivity, sign facts, pencil scaling") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    CoefficientField id = preset_coefficients("identity", mesh);
    DensityField rho = preset_density("positive_avg", mesh);
    LocalSpectrum ls = local_spectrum(mesh, id, rho);
    CHECK(ls.lambda1neg == doctest::Approx(kLambda1Neg8).epsilon(1e-8));
    double tmin = 1e300, tmax = 0.0;
    for (double v : ls.theta) {
        tmin = std::min(tmin, v);
        tmax = std::max(tmax, std::abs(v));
    }
    CHECK(tmin > 0.0);
    CHECK(tmin > 0.4); // observed well away from zero
    CHECK(ls.int_rho_theta2 < 0.0);
    CHECK(ls.int_rho_theta2 == doctest::Approx(kMTilde8).epsilon(1e-7));

    // int theta^2 = |Y*|
    DofMap dm = build_periodic_dofmap(mesh, false);
    auto dmp = std::make_shared<DofMap>(dm);
    SymmetricOperator pm = assemble_plain_mass(mesh, dmp);
    CHECK(pm.quadratic_form(ls.theta) == doctest::Approx(mesh.solid_area).epsilon(1e-12));

    // 2 rho halves lambda_1^-
    DensityField rho2 = rho;
    for (double& v : rho2.values) v *= 2.0;
    rho2.average *= 2.0;
    LocalSpectrum ls2 = local_spectrum(mesh, id, rho2);
    CHECK(ls2.lambda1neg == doctest::Approx(0.5 * ls.lambda1neg).epsilon(1e-10));

    // M <= 0 rejected
    DensityField zero = preset_density("zero_avg", mesh);
    CHECK_THROWS_AS(local_spectrum(mesh, id, zero), ValidationError);
}

TEST_CASE("weighted cell data: degenerate theta == 1, frozen q_tilde, scale law") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    CoefficientField id = preset_coefficients("identity", mesh);
    DensityField rho = preset_density("positive_avg", mesh);

    // forcing theta == 1 must reproduce a and q (M_tilde = M > 0 is rejected,
    // so compare the tilde tensor built directly from the unweighted fields)
    DofMap dm = build_periodic_dofmap(mesh, false);
    Vec ones(static_cast<std::size_t>(dm.n_dofs), 1.0);
    std::vector<double> th2 = element_squared_average(mesh, dm, ones);
    for (double v : th2) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

    LocalSpectrum ls = local_spectrum(mesh, id, rho);
    WeightedCellData w = weighted_cell_data(mesh, id, rho, ls.theta);
    CHECK(w.M_tilde < 0.0);
    CHECK(w.M_tilde == doctest::Approx(kMTilde8).epsilon(1e-7));
    CHECK(w.q_tilde.min_eigenvalue() > 0.0);
    CHECK(w.q_tilde.a11 == doctest::Approx(0.5360113782).epsilon(1e-7));
    CHECK(w.q_tilde.a22 == doctest::Approx(0.9022896557).epsilon(1e-7));

    // scaling theta by 2 scales q_tilde and M_tilde by 4
    Vec theta2 = ls.theta;
    for (double& v : theta2) v *= 2.0;
    WeightedCellData w2 = weighted_cell_data(mesh, id, rho, theta2);
    CHECK(w2.M_tilde == doctest::Approx(4.0 * w.M_tilde).epsilon(1e-12));
    CHECK(w2.q_tilde.a11 == doctest::Approx(4.0 * w.q_tilde.a11).epsilon(1e-10));
    CHECK(w2.q_tilde.a22 == doctest::Approx(4.0 * w.q_tilde.a22).epsilon(1e-10));
}

TEST_CASE("mean-zero invariant for every corrector field") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(16));
    CoefficientField id = preset_coefficients("identity", mesh);
    DofMap dm = build_periodic_dofmap(mesh, true);
    Vec w = integration_weights(mesh, dm);
    DensityField rho = preset_density("zero_avg", mesh);
    for (const Vec& field : {solve_cell_corrector(mesh, id, 1), solve_cell_corrector(mesh, id, 2),
                             solve_cell_corrector_rho(mesh, id, rho)}) {
        double mean = 0.0;
        for (std::size_t i = 0; i < field.size(); ++i) mean += w[i] * field[i];
        CHECK(std::abs(mean) < 1e-12);
    }
}

TEST_CASE("homogenized model: regimes carry the right pieces, JSON serializes") {
    HomogenizedModel mp = build_homogenized_model(CellGeometry::square_hole(8), "identity",
                                                  "positive_avg");
    CHECK(mp.regime == Regime::MPos);
    CHECK(mp.lambda1neg.has_value());
    CHECK(mp.q_tilde.has_value());
    CHECK(!mp.chi0.has_value());
    CHECK(mp.M == doctest::Approx(15.0 / 32.0));

    HomogenizedModel mz = build_homogenized_model(CellGeometry::square_hole(8), "identity",
                                                  "zero_avg");
    CHECK(mz.regime == Regime::MZero);
    CHECK(mz.chi0.has_value());
    CHECK(mz.nu2.has_value());
    CHECK(!mz.lambda1neg.has_value());

    HomogenizedModel mn = build_homogenized_model(CellGeometry::square_hole(8), "identity",
                                                  "negative_avg");
    CHECK(mn.regime == Regime::MNeg);

    std::string doc = mp.to_json();
    CHECK(doc.find("\"lambda1neg\"") != std::string::npos);
    CHECK(doc.find("\"q\"") != std::string::npos);
    CHECK(mp.hash() != mz.hash());

    // Cauchy trend of nu^2 over m = 8 -> 16 -> 32
    Vec nu2s;
    for (int m : {8, 16, 32}) {
        HomogenizedModel mm = build_homogenized_model(CellGeometry::square_hole(m), "identity",
                                                      "zero_avg");
        nu2s.push_back(*mm.nu2);
    }
    CHECK(std::abs(nu2s[2] - nu2s[1]) < std::abs(nu2s[1] - nu2s[0]));
    CHECK(nu2s[0] == doctest::Approx(kNu2_8).epsilon(1e-8));
}
