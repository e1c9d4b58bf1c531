#include "perfhom/finescale.hpp"

#include "perfhom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace perfhom {

namespace {

template <typename MeshT>
std::array<double, 2> tri_gradient_impl(const MeshT& mesh, std::size_t t, const Vec& vv) {
    const Tri& tri = mesh.triangles[t];
    const Point& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Point& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Point& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
    double det = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
    double g[3][2] = {{(p1.y - p2.y) / det, (p2.x - p1.x) / det},
                      {(p2.y - p0.y) / det, (p0.x - p2.x) / det},
                      {(p0.y - p1.y) / det, (p1.x - p0.x) / det}};
    std::array<double, 2> out{0.0, 0.0};
    for (int r = 0; r < 3; ++r) {
        double c = vv[static_cast<std::size_t>(tri[r])];
        out[0] += c * g[r][0];
        out[1] += c * g[r][1];
    }
    return out;
}

// int_T u v = A/12 ((sum u)(sum v) + u . v) for P1 interpolants
double tri_l2_product(double area, const double* u, const double* v) {
    double su = u[0] + u[1] + u[2];
    double sv = v[0] + v[1] + v[2];
    return area / 12.0 * (su * sv + u[0] * v[0] + u[1] * v[1] + u[2] * v[2]);
}

} // namespace

std::array<double, 2> triangle_gradient(const DomainMesh& mesh, std::size_t t, const Vec& vv) {
    return tri_gradient_impl(mesh, t, vv);
}
std::array<double, 2> triangle_gradient(const CellMesh& mesh, std::size_t t, const Vec& vv) {
    return tri_gradient_impl(mesh, t, vv);
}

double weighted_l2_product(const DomainMesh& mesh, const DensityField& density, const Vec& u,
                           const Vec& v) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Tri& tri = mesh.triangles[t];
        double uu[3], vv[3];
        for (int r = 0; r < 3; ++r) {
            uu[r] = u[static_cast<std::size_t>(tri[r])];
            vv[r] = v[static_cast<std::size_t>(tri[r])];
        }
        s += density.values[t] * tri_l2_product(mesh.areas[t], uu, vv);
    }
    return s;
}

double plain_l2_product(const DomainMesh& mesh, const Vec& u, const Vec& v) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Tri& tri = mesh.triangles[t];
        double uu[3], vv[3];
        for (int r = 0; r < 3; ++r) {
            uu[r] = u[static_cast<std::size_t>(tri[r])];
            vv[r] = v[static_cast<std::size_t>(tri[r])];
        }
        s += tri_l2_product(mesh.areas[t], uu, vv);
    }
    return s;
}

EpsSolution solve_eps_spectrum(std::shared_ptr<const DomainMesh> mesh,
                               const CoefficientField& coeff, const DensityField& density,
                               int count_pos, int count_neg, NormalizationTag tag) {
    auto dofmap = std::make_shared<DofMap>(build_dirichlet_dofmap(*mesh));
    SymmetricOperator k = assemble_stiffness(*mesh, coeff, dofmap);
    SymmetricOperator b = assemble_weighted_mass(*mesh, density, dofmap);

    EpsSolution sol;
    sol.n = mesh->n;
    sol.mesh = mesh;
    sol.dofmap = dofmap;
    sol.spectrum = solve_indefinite_pencil(k, b, count_pos, count_neg);
    sol.spectrum.tag = tag;

    double scale = 1.0;
    if (tag == NormalizationTag::BScaledEps) scale = std::sqrt(sol.eps());
    if (scale != 1.0) {
        for (auto* side : {&sol.spectrum.positive, &sol.spectrum.negative}) {
            for (Vec& v : side->vectors)
                for (double& x : v) x *= scale;
        }
    }

    // verify the tagged orthonormalization by direct quadrature
    double target = (tag == NormalizationTag::BScaledEps) ? sol.eps() : 1.0;
    auto gram = [&](const SpectrumSide& side, double sign) {
        int c = side.count();
        DenseMatrix g(c, c);
        std::vector<Vec> vv;
        vv.reserve(static_cast<std::size_t>(c));
        for (const Vec& dv : side.vectors) vv.push_back(vertex_values(*dofmap, dv));
        for (int i = 0; i < c; ++i) {
            for (int j = i; j < c; ++j) {
                double p = weighted_l2_product(*mesh, density, vv[static_cast<std::size_t>(i)],
                                               vv[static_cast<std::size_t>(j)]);
                g(i, j) = p;
                g(j, i) = p;
                double expected = (i == j) ? sign * target : 0.0;
                if (std::abs(p - expected) > 1e-8 * target) {
                    throw SolverError("eps-spectrum normalization violated: Gram(" +
                                      std::to_string(i) + "," + std::to_string(j) + ") = " +
                                      std::to_string(p));
                }
            }
        }
        return g;
    };
    sol.gram_pos = gram(sol.spectrum.positive, 1.0);
    sol.gram_neg = gram(sol.spectrum.negative, -1.0);
    return sol;
}

FilledDomain make_filled_domain(const DomainMesh& mesh, int dof_budget) {
    FilledDomain fd;
    CellGeometry nohole = CellGeometry::no_hole(mesh.s);
    auto filled = std::make_shared<DomainMesh>(build_domain_mesh(mesh.n, mesh.s, nohole, dof_budget));
    fd.filled = filled;
    fd.filled_from_perforated.assign(mesh.vertices.size(), -1);
    const int N = mesh.N;
    std::vector<char> present(filled->vertices.size(), 0);
    for (int j = 0; j <= N; ++j) {
        for (int i = 0; i <= N; ++i) {
            int vp = mesh.grid_vertex(i, j);
            int vf = filled->grid_vertex(i, j);
            if (vp >= 0) {
                fd.filled_from_perforated[static_cast<std::size_t>(vp)] = vf;
                present[static_cast<std::size_t>(vf)] = 1;
            }
        }
    }
    for (std::size_t v = 0; v < present.size(); ++v) {
        if (!present[v]) fd.hole_interior.push_back(static_cast<int>(v));
    }
    return fd;
}

Vec harmonic_extension(const DomainMesh& mesh, const FilledDomain& fd, const Vec& u_vertex) {
    if (u_vertex.size() != mesh.vertices.size()) {
        throw ValidationError("harmonic_extension: vertex vector does not match the mesh");
    }
    const DomainMesh& filled = *fd.filled;
    Vec out(filled.vertices.size(), 0.0);
    for (std::size_t vp = 0; vp < u_vertex.size(); ++vp) {
        out[static_cast<std::size_t>(fd.filled_from_perforated[vp])] = u_vertex[vp];
    }
    if (fd.hole_interior.empty()) return out;

    // group interior vertices by hole cell and solve the local Dirichlet problems
    std::map<long long, std::vector<int>> by_hole;
    for (int vf : fd.hole_interior) {
        const Point& p = filled.vertices[static_cast<std::size_t>(vf)];
        long long cx = std::min<long long>(mesh.n - 1, static_cast<long long>(p.x * mesh.n));
        long long cy = std::min<long long>(mesh.n - 1, static_cast<long long>(p.y * mesh.n));
        by_hole[cy * mesh.n + cx].push_back(vf);
    }

    // identity-coefficient stiffness rows on the filled mesh
    auto free_map = std::make_shared<DofMap>(build_free_dofmap(filled.vertex_count()));
    CoefficientField id = preset_coefficients("identity", filled);
    SymmetricOperator kf = assemble_stiffness(filled, id, free_map);

    for (auto& [hole, verts] : by_hole) {
        const int ni = static_cast<int>(verts.size());
        std::map<int, int> local;
        for (int i = 0; i < ni; ++i) local[verts[static_cast<std::size_t>(i)]] = i;
        DenseMatrix a(ni, ni);
        Vec rhs(static_cast<std::size_t>(ni), 0.0);
        for (int i = 0; i < ni; ++i) {
            int row = verts[static_cast<std::size_t>(i)];
            for (int p = kf.row_ptr()[static_cast<std::size_t>(row)];
                 p < kf.row_ptr()[static_cast<std::size_t>(row) + 1]; ++p) {
                int col = kf.cols()[static_cast<std::size_t>(p)];
                double v = kf.vals()[static_cast<std::size_t>(p)];
                auto it = local.find(col);
                if (it != local.end()) {
                    a(i, it->second) += v;
                } else {
                    rhs[static_cast<std::size_t>(i)] -= v * out[static_cast<std::size_t>(col)];
                }
            }
        }
        Vec x = lu_solve(std::move(a), std::move(rhs));
        for (int i = 0; i < ni; ++i) out[static_cast<std::size_t>(verts[static_cast<std::size_t>(i)])] =
            x[static_cast<std::size_t>(i)];
    }
    return out;
}

double extension_gradient_ratio(const DomainMesh& mesh, const FilledDomain& fd,
                                const Vec& u_vertex, const Vec& extended_vertex) {
    double num = 0.0, den = 0.0;
    const DomainMesh& filled = *fd.filled;
    for (std::size_t t = 0; t < filled.triangles.size(); ++t) {
        auto g = triangle_gradient(filled, t, extended_vertex);
        num += filled.areas[t] * (g[0] * g[0] + g[1] * g[1]);
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        auto g = triangle_gradient(mesh, t, u_vertex);
        den += mesh.areas[t] * (g[0] * g[0] + g[1] * g[1]);
    }
    if (den == 0.0) throw ValidationError("extension ratio undefined for a constant field");
    return std::sqrt(num / den);
}

namespace {

// harmonic fill of a cell vertex field into the hole (local extension of the
// H^{1,*}_per representative used for plotting and correctors)
Vec fill_cell_field(const CellMesh& perf, const CellMesh& filled, const Vec& vertex_values) {
    Vec out(filled.vertices.size(), 0.0);
    std::vector<int> interior;
    for (int j = 0; j <= perf.m; ++j) {
        for (int i = 0; i <= perf.m; ++i) {
            int vf = filled.grid_vertex(i, j);
            int vp = perf.grid_vertex(i, j);
            if (vp >= 0) {
                out[static_cast<std::size_t>(vf)] = vertex_values[static_cast<std::size_t>(vp)];
            } else {
                interior.push_back(vf);
            }
        }
    }
    if (interior.empty()) return out;
    auto free_map = std::make_shared<DofMap>(build_free_dofmap(filled.vertex_count()));
    CoefficientField id = preset_coefficients("identity", filled);
    SymmetricOperator kf = assemble_stiffness(filled, id, free_map);
    const int ni = static_cast<int>(interior.size());
    std::map<int, int> local;
    for (int i = 0; i < ni; ++i) local[interior[static_cast<std::size_t>(i)]] = i;
    DenseMatrix a(ni, ni);
    Vec rhs(static_cast<std::size_t>(ni), 0.0);
    for (int i = 0; i < ni; ++i) {
        int row = interior[static_cast<std::size_t>(i)];
        for (int p = kf.row_ptr()[static_cast<std::size_t>(row)];
             p < kf.row_ptr()[static_cast<std::size_t>(row) + 1]; ++p) {
            int col = kf.cols()[static_cast<std::size_t>(p)];
            double v = kf.vals()[static_cast<std::size_t>(p)];
            auto it = local.find(col);
            if (it != local.end()) {
                a(i, it->second) += v;
            } else {
                rhs[static_cast<std::size_t>(i)] -= v * out[static_cast<std::size_t>(col)];
            }
        }
    }
    Vec x = lu_solve(std::move(a), std::move(rhs));
    for (int i = 0; i < ni; ++i)
        out[static_cast<std::size_t>(interior[static_cast<std::size_t>(i)])] = x[static_cast<std::size_t>(i)];
    return out;
}

} // namespace

CellFactor CellFactor::from_cell_vertex_field(const CellMesh& perf_cell, const Vec& vertex_values) {
    CellFactor f;
    f.kind = Kind::VertexP1;
    CellMesh filled = build_cell_mesh(CellGeometry::no_hole(perf_cell.m));
    f.values = fill_cell_field(perf_cell, filled, vertex_values);
    // int_Y of the P1 interpolant
    double s = 0.0;
    for (std::size_t t = 0; t < filled.triangles.size(); ++t) {
        const Tri& tri = filled.triangles[t];
        s += filled.areas[t] / 3.0 *
             (f.values[static_cast<std::size_t>(tri[0])] + f.values[static_cast<std::size_t>(tri[1])] +
              f.values[static_cast<std::size_t>(tri[2])]);
    }
    f.cell_integral = s;
    return f;
}

CellFactor CellFactor::from_cell_element_field(const CellMesh& perf_cell,
                                               const std::vector<double>& element_values,
                                               double hole_value) {
    if (element_values.size() != perf_cell.triangles.size()) {
        throw ValidationError("cell element field does not match the cell mesh");
    }
    CellFactor f;
    f.kind = Kind::ElementP0;
    CellMesh filled = build_cell_mesh(CellGeometry::no_hole(perf_cell.m));
    std::map<std::array<int, 3>, double> by_square;
    for (std::size_t t = 0; t < perf_cell.triangles.size(); ++t) {
        by_square[perf_cell.triangle_square[t]] = element_values[t];
    }
    f.values.resize(filled.triangles.size());
    double s = 0.0;
    for (std::size_t t = 0; t < filled.triangles.size(); ++t) {
        auto it = by_square.find(filled.triangle_square[t]);
        f.values[t] = (it != by_square.end()) ? it->second : hole_value;
        s += f.values[t] * filled.areas[t];
    }
    f.cell_integral = s;
    return f;
}

double two_scale_pairing(const FilledDomain& fd, const Vec& u_vertex, const Vec& phi0_vertex,
                         const CellFactor& phi1) {
    const DomainMesh& mesh = *fd.filled;
    if (u_vertex.size() != mesh.vertices.size() || phi0_vertex.size() != mesh.vertices.size()) {
        throw ValidationError("two_scale_pairing: vertex fields do not match the filled mesh");
    }
    // weights of int_T l_i l_j l_k: all equal A/10, two equal A/30, distinct A/60
    static const double w_eq3 = 1.0 / 10.0, w_eq2 = 1.0 / 30.0, w_dist = 1.0 / 60.0;
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Tri& tri = mesh.triangles[t];
        double u[3], p0[3];
        for (int r = 0; r < 3; ++r) {
            u[r] = u_vertex[static_cast<std::size_t>(tri[r])];
            p0[r] = phi0_vertex[static_cast<std::size_t>(tri[r])];
        }
        double area = mesh.areas[t];
        if (phi1.kind == CellFactor::Kind::ElementP0) {
            double c = phi1.values[static_cast<std::size_t>(mesh.local_triangle[t])];
            if (c == 0.0) continue;
            total += c * tri_l2_product(area, u, p0);
        } else {
            const Tri& ctri = mesh.reference_cell->triangles[static_cast<std::size_t>(mesh.local_triangle[t])];
            double p1v[3];
            for (int r = 0; r < 3; ++r) {
                // filled reference cell: vertex ids coincide with grid ids of the
                // filled cell mesh because the hole is absent
                p1v[r] = phi1.values[static_cast<std::size_t>(ctri[r])];
            }
            double s = 0.0;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    for (int k = 0; k < 3; ++k) {
                        double w = (i == j && j == k) ? w_eq3
                                   : (i == j || j == k || i == k) ? w_eq2
                                                                  : w_dist;
                        s += w * u[i] * p0[j] * p1v[k];
                    }
                }
            }
            total += area * s;
        }
    }
    return total;
}

double scaled_pairing(const FilledDomain& fd, const Vec& u_vertex, const Vec& psi0_vertex,
                      const CellFactor& psi1) {
    if (std::abs(psi1.cell_integral) > 1e-12) {
        throw ValidationError("scaled pairing requires a mean-zero periodic factor, int_Y psi1 = " +
                              std::to_string(psi1.cell_integral));
    }
    return two_scale_pairing(fd, u_vertex, psi0_vertex, psi1) * fd.filled->n;
}

} // namespace perfhom
