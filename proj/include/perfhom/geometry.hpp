#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace perfhom {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Tri {
    std::array<int, 3> v{};
    int operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

enum class HoleKind { Square, Polygon };

/// Rectangle in unit-cell coordinates; empty (x0 >= x1 or y0 >= y1) means no hole.
struct Rect {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
    bool empty() const { return x0 >= x1 || y0 >= y1; }
};

/// Description of the reference cell Y = (0,1)^2 with hole T, resolved on an
/// m x m background grid. The hole boundary always lies on grid lines so the
/// resulting meshes are exact.
struct CellGeometry {
    HoleKind hole_kind = HoleKind::Square;
    Rect hole_extent;
    int m = 8;

    static CellGeometry square_hole(int m);  // T = [3/8,5/8]^2
    static CellGeometry no_hole(int m);
    static CellGeometry polygon_hole(int m); // staircase disk inscribed in [3/8,5/8]^2

    void validate() const;

    // grid-square / grid-vertex classification at resolution m
    bool square_in_hole(int i, int j) const;
    bool vertex_strictly_interior(int i, int j) const;
    double hole_area() const;

private:
    // integer hole bounds for the square preset (grid units), cached by validate()
    mutable int hx0_ = 0, hx1_ = 0, hy0_ = 0, hy1_ = 0;
    mutable std::vector<std::uint8_t> hole_squares_; // polygon preset mask, m*m
    mutable bool prepared_ = false;
    void prepare() const;
};

/// Triangulation of the perforated unit cell Y* = Y \ T.
/// Vertices strictly interior to T are absent; periodic_partner maps every
/// vertex on a right/top face to its left/bottom master.
struct CellMesh {
    int m = 0;
    CellGeometry geom;
    std::vector<Point> vertices;
    std::vector<Tri> triangles;
    std::vector<double> areas;
    std::vector<int> periodic_partner; // per vertex: master vertex id (self if master)
    std::vector<int> hole_boundary;    // sorted vertex ids on dT
    std::vector<int> grid_to_vertex;   // (m+1)^2 lattice -> vertex id or -1
    std::vector<std::array<int, 3>> triangle_square; // (i, j, half) of the owning grid square
    double solid_area = 0.0;           // |Y*|

    int grid_vertex(int i, int j) const { return grid_to_vertex[static_cast<std::size_t>(j) * (m + 1) + i]; }
    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
};

/// Triangulation of Omega^eps for Omega = (0,1)^2, eps = 1/n, with s grid
/// squares per cell side. Every triangle knows its lattice cell k and the
/// matching CellMesh(m=s) triangle, so cell data transfers without
/// re-evaluation.
struct DomainMesh {
    int n = 0; // cells per side, eps = 1/n
    int s = 0; // subdivisions per cell side
    int N = 0; // n*s grid squares per side
    std::vector<Point> vertices;
    std::vector<Tri> triangles;
    std::vector<double> areas;
    std::vector<int> dirichlet_boundary;          // sorted vertex ids on dOmega
    std::vector<std::vector<int>> hole_boundaries; // per hole, sorted vertex ids
    std::vector<std::array<int, 2>> cell_index;   // per triangle: lattice cell (kx, ky)
    std::vector<int> local_triangle;              // per triangle: CellMesh(m=s) triangle id
    std::vector<Point> local_coord;               // per vertex: y = x/eps mod 1
    std::vector<int> local_vertex;                // per vertex: CellMesh(m=s) vertex id
    std::vector<int> grid_to_vertex;              // (N+1)^2 lattice -> vertex id or -1
    std::shared_ptr<const CellMesh> reference_cell;
    double solid_area = 0.0;

    double eps() const { return 1.0 / n; }
    int grid_vertex(int i, int j) const { return grid_to_vertex[static_cast<std::size_t>(j) * (N + 1) + i]; }
    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
};

CellMesh build_cell_mesh(const CellGeometry& geom);

/// Mesh Omega^eps; rejects builds whose vertex count exceeds `dof_budget`.
DomainMesh build_domain_mesh(int n, int s, const CellGeometry& geom, int dof_budget = 100000);

/// Pure mesh diagnostics; `ok` aggregates the invariant checks.
struct MeshReport {
    int vertex_count = 0;
    int triangle_count = 0;
    int edge_count = 0;
    int hole_components = 0;
    int euler_characteristic = 0; // V - E + F, counts 1 - (#holes) for our meshes
    double min_angle_deg = 0.0;
    double min_area = 0.0;
    double total_area = 0.0;
    bool positive_areas = true;
    bool pairing_consistent = true; // paired vertices differ by one lattice vector
    bool ok = true;
};

MeshReport mesh_report(const CellMesh& mesh);
MeshReport mesh_report(const DomainMesh& mesh);

// text export: `v x y`, `t i j k`, `tag name i...`, optional `field name v...`
struct NamedField {
    std::string name;
    std::vector<double> values; // per vertex
};
void write_mesh_text(std::ostream& os, const CellMesh& mesh,
                     const std::vector<NamedField>& fields = {});
void write_mesh_text(std::ostream& os, const DomainMesh& mesh,
                     const std::vector<NamedField>& fields = {});

} // namespace perfhom
