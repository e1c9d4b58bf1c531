#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "perfhom/errors.hpp"
#include "perfhom/geometry.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace perfhom;

TEST_CASE("cell mesh counts for the square-hole preset at m=8") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    // hole covers 4 grid squares with exactly 1 strictly interior vertex
    CHECK(mesh.vertex_count() == 80);
    CHECK(mesh.triangle_count() == 120);
    CHECK(mesh.solid_area == doctest::Approx(15.0 / 16.0).epsilon(1e-13));
}

TEST_CASE("cell mesh area is exact") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(16));
    double total = 0.0;
    for (double a : mesh.areas) total += a;
    CHECK(std::abs(total - 15.0 / 16.0) < 1e-12);
}

TEST_CASE("no-hole cell covers the full square") {
    CellMesh mesh = build_cell_mesh(CellGeometry::no_hole(8));
    CHECK(mesh.vertex_count() == 81);
    CHECK(mesh.triangle_count() == 2 * 64);
    CHECK(mesh.solid_area == doctest::Approx(1.0).epsilon(1e-14));
    // all four faces paired
    int replicas = 0;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (mesh.periodic_partner[static_cast<std::size_t>(v)] != v) ++replicas;
    }
    CHECK(replicas == 2 * 8 + 1); // right and top faces, corner counted once
}

TEST_CASE("periodic pairs differ by exactly one lattice vector") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        int mv = mesh.periodic_partner[static_cast<std::size_t>(v)];
        if (mv == v) continue;
        double dx = mesh.vertices[static_cast<std::size_t>(v)].x - mesh.vertices[static_cast<std::size_t>(mv)].x;
        double dy = mesh.vertices[static_cast<std::size_t>(v)].y - mesh.vertices[static_cast<std::size_t>(mv)].y;
        for (double d : {dx, dy}) {
            CHECK((std::abs(d) < 1e-14 || std::abs(std::abs(d) - 1.0) < 1e-14));
        }
        CHECK(std::abs(dx) + std::abs(dy) > 0.5);
    }
}

TEST_CASE("misaligned or touching holes are rejected") {
    CellGeometry g = CellGeometry::square_hole(12); // 12 not a multiple of 8
    CHECK_THROWS_AS(build_cell_mesh(g), ValidationError);
    CellGeometry touch = CellGeometry::square_hole(8);
    touch.hole_extent = Rect{0.0, 0.5, 0.25, 0.5};
    CHECK_THROWS_AS(build_cell_mesh(touch), ValidationError);
    CellGeometry tiny = CellGeometry::no_hole(4);
    CHECK_THROWS_AS(build_cell_mesh(tiny), ValidationError);
}

TEST_CASE("domain mesh: n=1 matches the cell connectivity") {
    DomainMesh dm = build_domain_mesh(1, 8, CellGeometry::square_hole(8));
    CellMesh cm = build_cell_mesh(CellGeometry::square_hole(8));
    CHECK(dm.vertex_count() == cm.vertex_count());
    CHECK(dm.triangle_count() == cm.triangle_count());
    CHECK(dm.dirichlet_boundary.size() == 32); // outer square at resolution 8
}

TEST_CASE("domain mesh area: n=4, s=8") {
    DomainMesh dm = build_domain_mesh(4, 8, CellGeometry::square_hole(8));
    CHECK(std::abs(dm.solid_area - 15.0 / 16.0) < 1e-12);
    CHECK(dm.hole_boundaries.size() == 16);
}

TEST_CASE("domain mesh local coordinates land on cell vertices (n=2, s=8)") {
    DomainMesh dm = build_domain_mesh(2, 8, CellGeometry::square_hole(8));
    const CellMesh& ref = *dm.reference_cell;
    for (int v = 0; v < dm.vertex_count(); ++v) {
        const Point& lc = dm.local_coord[static_cast<std::size_t>(v)];
        int cv = dm.local_vertex[static_cast<std::size_t>(v)];
        REQUIRE(cv >= 0);
        CHECK(ref.vertices[static_cast<std::size_t>(cv)].x == doctest::Approx(lc.x).epsilon(1e-15));
        CHECK(ref.vertices[static_cast<std::size_t>(cv)].y == doctest::Approx(lc.y).epsilon(1e-15));
    }
}

TEST_CASE("scaling consistency: domain cell k rescaled equals the reference cell") {
    DomainMesh dm = build_domain_mesh(2, 8, CellGeometry::square_hole(8));
    const CellMesh& ref = *dm.reference_cell;
    // collect the rescaled vertex set of cell (1, 0)
    std::set<std::pair<long long, long long>> cell_pts, ref_pts;
    for (std::size_t t = 0; t < dm.triangles.size(); ++t) {
        if (dm.cell_index[t][0] != 1 || dm.cell_index[t][1] != 0) continue;
        for (int r = 0; r < 3; ++r) {
            const Point& p = dm.vertices[static_cast<std::size_t>(dm.triangles[t][r])];
            double y1 = p.x * dm.n - 1.0, y2 = p.y * dm.n;
            cell_pts.insert({std::llround(y1 * 1e12), std::llround(y2 * 1e12)});
        }
    }
    for (const Point& p : ref.vertices) {
        ref_pts.insert({std::llround(p.x * 1e12), std::llround(p.y * 1e12)});
    }
    CHECK(cell_pts == ref_pts);
}

TEST_CASE("dof budget is enforced") {
    CHECK_THROWS_AS(build_domain_mesh(64, 8, CellGeometry::square_hole(8), 100000), BudgetError);
}

TEST_CASE("mesh report: annulus topology and hole count") {
    MeshReport rc = mesh_report(build_cell_mesh(CellGeometry::square_hole(8)));
    CHECK(rc.euler_characteristic == 0); // one hole
    CHECK(rc.hole_components == 1);
    CHECK(rc.ok);

    MeshReport rd = mesh_report(build_domain_mesh(4, 8, CellGeometry::square_hole(8)));
    CHECK(rd.hole_components == 16);
    CHECK(rd.euler_characteristic == 1 - 16);
    CHECK(rd.ok);

    MeshReport rn = mesh_report(build_cell_mesh(CellGeometry::no_hole(8)));
    CHECK(rn.min_angle_deg == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(rn.euler_characteristic == 1);
    CHECK(rn.ok);
}

TEST_CASE("polygon hole: staircase disk stays strictly interior and grid-exact") {
    CellMesh mesh = build_cell_mesh(CellGeometry::polygon_hole(16));
    double total = 0.0;
    for (double a : mesh.areas) total += a;
    CHECK(std::abs(total - mesh.solid_area) < 1e-14);
    CHECK(mesh.solid_area < 1.0);
    CHECK(mesh.solid_area > 0.9);
    MeshReport rep = mesh_report(mesh);
    CHECK(rep.ok);
}

TEST_CASE("mesh text export carries vertices, triangles and tags") {
    CellMesh mesh = build_cell_mesh(CellGeometry::square_hole(8));
    std::ostringstream os;
    std::vector<double> ones(static_cast<std::size_t>(mesh.vertex_count()), 1.0);
    write_mesh_text(os, mesh, {{"one", ones}});
    std::string text = os.str();
    CHECK(text.find("v 0 0") != std::string::npos);
    CHECK(text.find("t 0 1") != std::string::npos);
    CHECK(text.find("tag hole_boundary") != std::string::npos);
    CHECK(text.find("field one") != std::string::npos);
}
