#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "perfhom/errors.hpp"
#include "perfhom/materials.hpp"

#include <cmath>
#include <sstream>

using namespace perfhom;

TEST_CASE("identity preset: Id everywhere, alpha = 1") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    CoefficientField f = preset_coefficients("identity", mesh);
    CHECK(f.alpha == 1.0);
    for (const Tensor2& t : f.values) {
        CHECK(t.a11 == 1.0);
        CHECK(t.a12 == 0.0);
        CHECK(t.a22 == 1.0);
    }
}

TEST_CASE("layered preset: isotropic scaling with alpha >= 1") {
    CellMesh mesh = build_cell_mesh(CellGeometry::no_hole(8));
    CoefficientField f = preset_coefficients("layered", mesh);
    CHECK(f.alpha >= 1.0);
    for (std::size_t t = 0; t < f.values.size(); ++t) {
        CHECK(f.values[t].a11 == f.values[t].a22);
        CHECK(f.values[t].a12 == 0.0);
        CHECK(f.values[t].a11 >= 1.0);
        CHECK(f.values[t].a11 <= 3.0);
    }
    // a hypothetical element centered at y1 = 0 takes the value 2 + cos 0 = 3;
    // on this mesh the first column has midline 1/16
    CHECK(f.values[0].a11 == doctest::Approx(2.0 + std::cos(2.0 * 3.14159265358979323846 / 16.0)));
}

TEST_CASE("unknown preset is rejected") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    CHECK_THROWS_AS(preset_coefficients("nope", mesh), ValidationError);
    CHECK_THROWS_AS(preset_density("nope", mesh), ValidationError);
}

TEST_CASE("density presets: exact averages on the square-hole cell") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    DensityField pos = preset_density("positive_avg", mesh);
    DensityField zero = preset_density("zero_avg", mesh);
    DensityField neg = preset_density("negative_avg", mesh);
    CHECK(pos.average == doctest::Approx(15.0 / 32.0).epsilon(1e-14));
    CHECK(zero.average == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(neg.average == doctest::Approx(-15.0 / 32.0).epsilon(1e-14));
    for (std::size_t t = 0; t < pos.values.size(); ++t) {
        CHECK(neg.values[t] == -pos.values[t]);
    }
}

TEST_CASE("density average is resolution independent (piecewise-constant exactness)") {
    for (const char* preset : {"positive_avg", "zero_avg"}) {
        CellMesh m8 = build_cell_mesh(CellGeometry::square_hole(8));
        CellMesh m32 = build_cell_mesh(CellGeometry::square_hole(32));
        double a8 = preset_density(preset, m8).average;
        double a32 = preset_density(preset, m32).average;
        CHECK(std::abs(a8 - a32) < 1e-14);
    }
}

TEST_CASE("validate_indefinite: signed areas and the sign-definite error") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    DensityField pos = preset_density("positive_avg", mesh);
    SignedAreas sa = validate_indefinite(pos, mesh.areas);
    CHECK(sa.positive_area == doctest::Approx(15.0 / 32.0).epsilon(1e-14));
    CHECK(sa.negative_area == doctest::Approx(15.0 / 32.0).epsilon(1e-14));

    DensityField constant;
    constant.values.assign(mesh.triangles.size(), 1.0);
    constant.average = mesh.solid_area;
    CHECK_THROWS_AS(validate_indefinite(constant, mesh.areas), ValidationError);

    DensityField zero = preset_density("zero_avg", mesh);
    SignedAreas sz = validate_indefinite(zero, mesh.areas);
    CHECK(sz.positive_area == doctest::Approx(15.0 / 32.0).epsilon(1e-14));
    CHECK(sz.negative_area == doctest::Approx(15.0 / 32.0).epsilon(1e-14));
}

TEST_CASE("custom fields load from the elem_index table format") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    std::stringstream cs;
    cs << "# tensor rows\n";
    for (int t = 0; t < mesh.triangle_count(); ++t) cs << t << " 2.0 0.1 3.0\n";
    CoefficientField cf = load_coefficients(cs, mesh.triangle_count());
    CHECK(cf.values[5].a12 == 0.1);
    CHECK(cf.alpha > 0.0);

    std::stringstream ds;
    for (int t = 0; t < mesh.triangle_count(); ++t) ds << t << " " << (t % 2 ? 1.0 : -1.0) << "\n";
    DensityField df = load_density(ds, mesh.triangle_count(), mesh.areas);
    CHECK(std::abs(df.average) < 1e-12);

    std::stringstream bad;
    bad << "9999 1.0\n";
    CHECK_THROWS_AS(load_density(bad, mesh.triangle_count(), mesh.areas), ValidationError);
}

TEST_CASE("domain transfer reuses cell element values exactly") {
    DomainMesh dm = build_domain_mesh(2, 8, CellGeometry::square_hole(8));
    CoefficientField cell_f = preset_coefficients("layered", *dm.reference_cell);
    CoefficientField dom_f = transfer_to_domain(cell_f, dm);
    for (std::size_t t = 0; t < dm.triangles.size(); ++t) {
        const Tensor2& a = dom_f.values[t];
        const Tensor2& b = cell_f.values[static_cast<std::size_t>(dm.local_triangle[t])];
        CHECK(a.a11 == b.a11);
        CHECK(a.a22 == b.a22);
    }
    DensityField cell_d = preset_density("zero_avg", *dm.reference_cell);
    DensityField dom_d = transfer_to_domain(cell_d, dm);
    CHECK(std::abs(dom_d.average) < 1e-13);
}
