#include "perfhom/geometry.hpp"

#include "perfhom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

namespace perfhom {

namespace {

int grid_index(double coord, int m, const char* what) {
    double scaled = coord * m;
    double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-12) {
        throw ValidationError(std::string(what) + " does not lie on a grid line at resolution m=" +
                              std::to_string(m));
    }
    return static_cast<int>(rounded);
}

} // namespace

CellGeometry CellGeometry::square_hole(int m) {
    CellGeometry g;
    g.hole_kind = HoleKind::Square;
    g.hole_extent = Rect{3.0 / 8.0, 5.0 / 8.0, 3.0 / 8.0, 5.0 / 8.0};
    g.m = m;
    return g;
}

CellGeometry CellGeometry::no_hole(int m) {
    CellGeometry g;
    g.hole_kind = HoleKind::Square;
    g.hole_extent = Rect{}; // empty
    g.m = m;
    return g;
}

CellGeometry CellGeometry::polygon_hole(int m) {
    CellGeometry g;
    g.hole_kind = HoleKind::Polygon;
    g.hole_extent = Rect{3.0 / 8.0, 5.0 / 8.0, 3.0 / 8.0, 5.0 / 8.0};
    g.m = m;
    return g;
}

void CellGeometry::validate() const {
    if (m < 8) throw ValidationError("cell resolution m must be >= 8, got " + std::to_string(m));
    if (!hole_extent.empty()) {
        if (hole_extent.x0 <= 0.0 || hole_extent.x1 >= 1.0 || hole_extent.y0 <= 0.0 ||
            hole_extent.y1 >= 1.0) {
            throw ValidationError("hole must be strictly interior to the unit cell");
        }
        if (hole_kind == HoleKind::Square && m % 8 != 0) {
            throw ValidationError("square-hole preset requires m to be a multiple of 8, got " +
                                  std::to_string(m));
        }
    }
    prepare();
}

void CellGeometry::prepare() const {
    if (prepared_) return;
    hx0_ = hx1_ = hy0_ = hy1_ = 0;
    hole_squares_.clear();
    if (!hole_extent.empty()) {
        if (hole_kind == HoleKind::Square) {
            hx0_ = grid_index(hole_extent.x0, m, "hole x0");
            hx1_ = grid_index(hole_extent.x1, m, "hole x1");
            hy0_ = grid_index(hole_extent.y0, m, "hole y0");
            hy1_ = grid_index(hole_extent.y1, m, "hole y1");
        } else {
            // staircase disk: remove grid squares whose center lies in the
            // inscribed disk of hole_extent
            double cx = (hole_extent.x0 + hole_extent.x1) / 2;
            double cy = (hole_extent.y0 + hole_extent.y1) / 2;
            double r = std::min(hole_extent.x1 - hole_extent.x0, hole_extent.y1 - hole_extent.y0) / 2;
            hole_squares_.assign(static_cast<std::size_t>(m) * m, 0);
            for (int j = 0; j < m; ++j) {
                for (int i = 0; i < m; ++i) {
                    double sx = (i + 0.5) / m, sy = (j + 0.5) / m;
                    double d2 = (sx - cx) * (sx - cx) + (sy - cy) * (sy - cy);
                    if (d2 <= r * r) hole_squares_[static_cast<std::size_t>(j) * m + i] = 1;
                }
            }
        }
    }
    prepared_ = true;
}

bool CellGeometry::square_in_hole(int i, int j) const {
    prepare();
    if (hole_extent.empty()) return false;
    if (hole_kind == HoleKind::Square) {
        return i >= hx0_ && i < hx1_ && j >= hy0_ && j < hy1_;
    }
    return hole_squares_[static_cast<std::size_t>(j) * m + i] != 0;
}

bool CellGeometry::vertex_strictly_interior(int i, int j) const {
    prepare();
    if (hole_extent.empty()) return false;
    if (hole_kind == HoleKind::Square) {
        return i > hx0_ && i < hx1_ && j > hy0_ && j < hy1_;
    }
    // interior to the removed-square union: all four adjacent squares removed
    auto in = [&](int si, int sj) {
        return si >= 0 && si < m && sj >= 0 && sj < m && square_in_hole(si, sj);
    };
    return in(i - 1, j - 1) && in(i, j - 1) && in(i - 1, j) && in(i, j);
}

double CellGeometry::hole_area() const {
    prepare();
    if (hole_extent.empty()) return 0.0;
    int count = 0;
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            if (square_in_hole(i, j)) ++count;
    return static_cast<double>(count) / (static_cast<double>(m) * m);
}

CellMesh build_cell_mesh(const CellGeometry& geom) {
    geom.validate();
    const int m = geom.m;

    CellMesh mesh;
    mesh.m = m;
    mesh.geom = geom;
    mesh.grid_to_vertex.assign(static_cast<std::size_t>(m + 1) * (m + 1), -1);

    for (int j = 0; j <= m; ++j) {
        for (int i = 0; i <= m; ++i) {
            if (geom.vertex_strictly_interior(i, j)) continue;
            mesh.grid_to_vertex[static_cast<std::size_t>(j) * (m + 1) + i] =
                static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
        }
    }

    const double tri_area = 1.0 / (2.0 * m * m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            if (geom.square_in_hole(i, j)) continue;
            int v00 = mesh.grid_vertex(i, j);
            int v10 = mesh.grid_vertex(i + 1, j);
            int v01 = mesh.grid_vertex(i, j + 1);
            int v11 = mesh.grid_vertex(i + 1, j + 1);
            mesh.triangles.push_back(Tri{{v00, v10, v11}});
            mesh.triangle_square.push_back({i, j, 0});
            mesh.triangles.push_back(Tri{{v00, v11, v01}});
            mesh.triangle_square.push_back({i, j, 1});
            mesh.areas.push_back(tri_area);
            mesh.areas.push_back(tri_area);
        }
    }
    mesh.solid_area = 0.0;
    for (double a : mesh.areas) mesh.solid_area += a;

    mesh.periodic_partner.resize(mesh.vertices.size());
    for (int j = 0; j <= m; ++j) {
        for (int i = 0; i <= m; ++i) {
            int v = mesh.grid_vertex(i, j);
            if (v < 0) continue;
            int mi = i % m, mj = j % m;
            mesh.periodic_partner[static_cast<std::size_t>(v)] =
                (mi == i && mj == j) ? v : mesh.grid_vertex(mi, mj);
        }
    }

    if (!geom.hole_extent.empty()) {
        std::set<int> hb;
        // a vertex is on dT when it touches both removed and kept squares
        for (int j = 0; j <= m; ++j) {
            for (int i = 0; i <= m; ++i) {
                int v = mesh.grid_vertex(i, j);
                if (v < 0) continue;
                bool touches_hole = false, touches_solid = false;
                for (int dj = -1; dj <= 0; ++dj) {
                    for (int di = -1; di <= 0; ++di) {
                        int si = i + di, sj = j + dj;
                        if (si < 0 || si >= m || sj < 0 || sj >= m) continue;
                        (geom.square_in_hole(si, sj) ? touches_hole : touches_solid) = true;
                    }
                }
                if (touches_hole && touches_solid) hb.insert(v);
            }
        }
        mesh.hole_boundary.assign(hb.begin(), hb.end());
    }
    return mesh;
}

DomainMesh build_domain_mesh(int n, int s, const CellGeometry& geom, int dof_budget) {
    if (n < 1) throw ValidationError("n must be positive");
    if (s < 1) throw ValidationError("s must be positive");
    CellGeometry cgeom = geom;
    cgeom.m = s;
    cgeom.validate();

    const long long N = static_cast<long long>(n) * s;
    if ((N + 1) * (N + 1) > dof_budget) {
        throw BudgetError("domain mesh would need " + std::to_string((N + 1) * (N + 1)) +
                          " grid vertices, budget is " + std::to_string(dof_budget));
    }

    DomainMesh mesh;
    mesh.n = n;
    mesh.s = s;
    mesh.N = static_cast<int>(N);
    auto ref = std::make_shared<CellMesh>(build_cell_mesh(cgeom));
    mesh.reference_cell = ref;

    const int Ni = mesh.N;
    mesh.grid_to_vertex.assign(static_cast<std::size_t>(Ni + 1) * (Ni + 1), -1);
    for (int j = 0; j <= Ni; ++j) {
        for (int i = 0; i <= Ni; ++i) {
            int li = i % s, lj = j % s;
            if (cgeom.vertex_strictly_interior(li, lj)) continue;
            mesh.grid_to_vertex[static_cast<std::size_t>(j) * (Ni + 1) + i] =
                static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back({static_cast<double>(i) / Ni, static_cast<double>(j) / Ni});
            mesh.local_coord.push_back({static_cast<double>(li) / s, static_cast<double>(lj) / s});
            mesh.local_vertex.push_back(ref->grid_vertex(li, lj));
        }
    }

    // per-square lookup into the reference cell triangulation
    std::map<std::array<int, 3>, int> square_to_tri;
    for (int t = 0; t < ref->triangle_count(); ++t) {
        square_to_tri[ref->triangle_square[static_cast<std::size_t>(t)]] = t;
    }

    const double tri_area = 1.0 / (2.0 * static_cast<double>(Ni) * Ni);
    for (int j = 0; j < Ni; ++j) {
        for (int i = 0; i < Ni; ++i) {
            int li = i % s, lj = j % s;
            if (cgeom.square_in_hole(li, lj)) continue;
            int v00 = mesh.grid_vertex(i, j);
            int v10 = mesh.grid_vertex(i + 1, j);
            int v01 = mesh.grid_vertex(i, j + 1);
            int v11 = mesh.grid_vertex(i + 1, j + 1);
            std::array<int, 2> cell{i / s, j / s};
            mesh.triangles.push_back(Tri{{v00, v10, v11}});
            mesh.cell_index.push_back(cell);
            mesh.local_triangle.push_back(square_to_tri.at({li, lj, 0}));
            mesh.triangles.push_back(Tri{{v00, v11, v01}});
            mesh.cell_index.push_back(cell);
            mesh.local_triangle.push_back(square_to_tri.at({li, lj, 1}));
            mesh.areas.push_back(tri_area);
            mesh.areas.push_back(tri_area);
        }
    }
    mesh.solid_area = 0.0;
    for (double a : mesh.areas) mesh.solid_area += a;

    for (int j = 0; j <= Ni; ++j) {
        for (int i = 0; i <= Ni; ++i) {
            int v = mesh.grid_vertex(i, j);
            if (v >= 0 && (i == 0 || i == Ni || j == 0 || j == Ni)) {
                mesh.dirichlet_boundary.push_back(v);
            }
        }
    }
    std::sort(mesh.dirichlet_boundary.begin(), mesh.dirichlet_boundary.end());

    if (!cgeom.hole_extent.empty()) {
        mesh.hole_boundaries.resize(static_cast<std::size_t>(n) * n);
        for (int cy = 0; cy < n; ++cy) {
            for (int cx = 0; cx < n; ++cx) {
                std::set<int> hb;
                for (int lv : ref->hole_boundary) {
                    // reference hole-boundary vertices are never on the cell faces
                    const Point& p = ref->vertices[static_cast<std::size_t>(lv)];
                    int li = static_cast<int>(std::lround(p.x * s));
                    int lj = static_cast<int>(std::lround(p.y * s));
                    hb.insert(mesh.grid_vertex(cx * s + li, cy * s + lj));
                }
                mesh.hole_boundaries[static_cast<std::size_t>(cy) * n + cx].assign(hb.begin(), hb.end());
            }
        }
    }
    return mesh;
}

namespace {

struct EdgeSet {
    std::set<std::pair<int, int>> edges;
    void add(int a, int b) { edges.insert({std::min(a, b), std::max(a, b)}); }
};

template <typename MeshT>
MeshReport report_impl(const MeshT& mesh, int expected_holes,
                       const std::vector<int>* periodic_partner, int period_m) {
    MeshReport r;
    r.vertex_count = static_cast<int>(mesh.vertices.size());
    r.triangle_count = static_cast<int>(mesh.triangles.size());
    r.hole_components = expected_holes;

    EdgeSet es;
    double min_angle = 180.0;
    double min_area = 1e300;
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Tri& tri = mesh.triangles[t];
        const Point& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const Point& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const Point& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
        double ax = p1.x - p0.x, ay = p1.y - p0.y;
        double bx = p2.x - p0.x, by = p2.y - p0.y;
        double area = 0.5 * (ax * by - ay * bx);
        if (area <= 0.0) r.positive_areas = false;
        min_area = std::min(min_area, area);
        total += area;
        const Point* pts[3] = {&p0, &p1, &p2};
        for (int k = 0; k < 3; ++k) {
            const Point& a = *pts[k];
            const Point& b = *pts[(k + 1) % 3];
            const Point& c = *pts[(k + 2) % 3];
            double ux = b.x - a.x, uy = b.y - a.y;
            double vx = c.x - a.x, vy = c.y - a.y;
            double cosang = (ux * vx + uy * vy) /
                            (std::sqrt(ux * ux + uy * uy) * std::sqrt(vx * vx + vy * vy));
            cosang = std::clamp(cosang, -1.0, 1.0);
            min_angle = std::min(min_angle, std::acos(cosang) * 180.0 / 3.14159265358979323846);
        }
        es.add(tri[0], tri[1]);
        es.add(tri[1], tri[2]);
        es.add(tri[2], tri[0]);
    }
    r.edge_count = static_cast<int>(es.edges.size());
    r.min_angle_deg = min_angle;
    r.min_area = min_area;
    r.total_area = total;
    r.euler_characteristic = r.vertex_count - r.edge_count + r.triangle_count;

    if (periodic_partner) {
        (void)period_m;
        // replicas sit exactly one lattice vector from their master
        auto is_lattice = [](double d) {
            return std::abs(d) < 1e-12 || std::abs(std::abs(d) - 1.0) < 1e-12;
        };
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
            int mv = (*periodic_partner)[v];
            if (mv == static_cast<int>(v)) continue;
            double fx = mesh.vertices[v].x - mesh.vertices[static_cast<std::size_t>(mv)].x;
            double fy = mesh.vertices[v].y - mesh.vertices[static_cast<std::size_t>(mv)].y;
            if (!is_lattice(fx) || !is_lattice(fy) ||
                (std::abs(fx) < 1e-12 && std::abs(fy) < 1e-12)) {
                r.pairing_consistent = false;
            }
        }
    }

    r.ok = r.positive_areas && r.pairing_consistent && r.euler_characteristic == 1 - expected_holes;
    return r;
}

} // namespace

MeshReport mesh_report(const CellMesh& mesh) {
    int holes = mesh.geom.hole_extent.empty() ? 0 : 1;
    return report_impl(mesh, holes, &mesh.periodic_partner, mesh.m);
}

MeshReport mesh_report(const DomainMesh& mesh) {
    int holes = static_cast<int>(mesh.hole_boundaries.size());
    return report_impl(mesh, holes, nullptr, mesh.N);
}

namespace {

template <typename MeshT>
void write_mesh_common(std::ostream& os, const MeshT& mesh, const std::vector<NamedField>& fields) {
    os << "# perfhom mesh\n";
    for (const Point& p : mesh.vertices) os << "v " << p.x << " " << p.y << "\n";
    for (const Tri& t : mesh.triangles) os << "t " << t[0] << " " << t[1] << " " << t[2] << "\n";
    for (const NamedField& f : fields) {
        os << "field " << f.name;
        for (double v : f.values) os << " " << v;
        os << "\n";
    }
}

void write_tag(std::ostream& os, const std::string& name, const std::vector<int>& ids) {
    if (ids.empty()) return;
    os << "tag " << name;
    for (int i : ids) os << " " << i;
    os << "\n";
}

} // namespace

void write_mesh_text(std::ostream& os, const CellMesh& mesh, const std::vector<NamedField>& fields) {
    write_mesh_common(os, mesh, fields);
    write_tag(os, "hole_boundary", mesh.hole_boundary);
}

void write_mesh_text(std::ostream& os, const DomainMesh& mesh, const std::vector<NamedField>& fields) {
    write_mesh_common(os, mesh, fields);
    write_tag(os, "dirichlet", mesh.dirichlet_boundary);
    for (std::size_t h = 0; h < mesh.hole_boundaries.size(); ++h) {
        write_tag(os, "hole_" + std::to_string(h), mesh.hole_boundaries[h]);
    }
}

} // namespace perfhom
