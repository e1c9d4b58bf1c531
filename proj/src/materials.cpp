#include "perfhom/materials.hpp"

#include "perfhom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

namespace perfhom {

double Tensor2::min_eigenvalue() const {
    double tr = a11 + a22;
    double disc = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a12);
    return 0.5 * (tr - disc);
}

double Tensor2::max_eigenvalue() const {
    double tr = a11 + a22;
    double disc = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a12);
    return 0.5 * (tr + disc);
}

void CoefficientField::validate(int triangle_count) const {
    if (static_cast<int>(values.size()) != triangle_count) {
        throw ValidationError("coefficient field has " + std::to_string(values.size()) +
                              " elements, mesh has " + std::to_string(triangle_count));
    }
    for (const Tensor2& t : values) {
        if (t.min_eigenvalue() <= 0.0) {
            throw ValidationError("coefficient field is not elliptic on some element");
        }
    }
}

namespace {

template <typename MeshT>
CoefficientField coefficients_impl(const std::string& name, const MeshT& mesh,
                                   const std::vector<Point>* local_coord) {
    CoefficientField f;
    f.preset = name;
    std::size_t nt = mesh.triangles.size();
    f.values.resize(nt);
    if (name == "identity") {
        for (auto& t : f.values) t = Tensor2{1.0, 0.0, 1.0};
        f.alpha = 1.0;
    } else if (name == "layered") {
        double alpha = 1e300;
        for (std::size_t t = 0; t < nt; ++t) {
            double xmin = 1e300, xmax = -1e300;
            for (int k = 0; k < 3; ++k) {
                int v = mesh.triangles[t][k];
                double x = local_coord ? (*local_coord)[static_cast<std::size_t>(v)].x
                                       : mesh.vertices[static_cast<std::size_t>(v)].x;
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
            }
            // midline sample of the element's y1-extent; keeps the discrete
            // layered medium an exact equispaced sampling of the profile
            double val = 2.0 + std::cos(2.0 * 3.14159265358979323846 * (xmin + xmax) / 2.0);
            f.values[t] = Tensor2{val, 0.0, val};
            alpha = std::min(alpha, val);
        }
        f.alpha = alpha;
    } else {
        throw ValidationError("unknown coefficient preset '" + name + "'");
    }
    return f;
}

double centroid_x(const CellMesh& mesh, std::size_t t) {
    const Tri& tri = mesh.triangles[t];
    return (mesh.vertices[static_cast<std::size_t>(tri[0])].x +
            mesh.vertices[static_cast<std::size_t>(tri[1])].x +
            mesh.vertices[static_cast<std::size_t>(tri[2])].x) / 3.0;
}

void check_split_aligned(const CellMesh& mesh) {
    // presets split at y1 = 1/2; every triangle must lie on one side
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        double xmin = 1e300, xmax = -1e300;
        for (int k = 0; k < 3; ++k) {
            double x = mesh.vertices[static_cast<std::size_t>(mesh.triangles[t][k])].x;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
        if (xmin < 0.5 - 1e-12 && xmax > 0.5 + 1e-12) {
            throw ValidationError("density preset requires the split line y1=1/2 to be a mesh line");
        }
    }
}

DensityField density_cell(const std::string& density_case, const CellMesh& mesh) {
    check_split_aligned(mesh);
    DensityField d;
    d.preset = density_case;
    double sign = 1.0;
    std::string base = density_case;
    if (density_case == "negative_avg") {
        base = "positive_avg";
        sign = -1.0;
    }
    d.values.resize(mesh.triangles.size());
    double avg = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        bool left = centroid_x(mesh, t) < 0.5;
        double v;
        if (base == "positive_avg") {
            v = left ? 2.0 : -1.0;
        } else if (base == "zero_avg") {
            v = left ? 1.0 : -1.0;
        } else {
            throw ValidationError("unknown density case '" + density_case + "'");
        }
        v *= sign;
        d.values[t] = v;
        avg += v * mesh.areas[t];
    }
    d.average = avg;
    return d;
}

} // namespace

CoefficientField preset_coefficients(const std::string& name, const CellMesh& mesh) {
    return coefficients_impl(name, mesh, nullptr);
}

CoefficientField preset_coefficients(const std::string& name, const DomainMesh& mesh) {
    // evaluate in cell coordinates y = x/eps through the local maps
    if (name == "identity" || name == "layered") {
        return transfer_to_domain(preset_coefficients(name, *mesh.reference_cell), mesh);
    }
    throw ValidationError("unknown coefficient preset '" + name + "'");
}

DensityField preset_density(const std::string& density_case, const CellMesh& mesh) {
    return density_cell(density_case, mesh);
}

DensityField preset_density(const std::string& density_case, const DomainMesh& mesh) {
    return transfer_to_domain(density_cell(density_case, *mesh.reference_cell), mesh);
}

DensityField negate(const DensityField& d) {
    DensityField out = d;
    for (double& v : out.values) v = -v;
    out.average = -d.average;
    if (d.preset == "positive_avg") out.preset = "negative_avg";
    else if (d.preset == "negative_avg") out.preset = "positive_avg";
    else out.preset = "-" + d.preset;
    return out;
}

SignedAreas validate_indefinite(const DensityField& d, const std::vector<double>& areas) {
    if (d.values.size() != areas.size()) {
        throw ValidationError("density field / mesh size mismatch");
    }
    SignedAreas sa;
    for (std::size_t t = 0; t < d.values.size(); ++t) {
        if (d.values[t] > 0.0) sa.positive_area += areas[t];
        if (d.values[t] < 0.0) sa.negative_area += areas[t];
    }
    if (sa.positive_area == 0.0 || sa.negative_area == 0.0) {
        throw ValidationError("density is sign-definite; the two-sequence spectral structure "
                              "requires a sign change on Y*");
    }
    return sa;
}

namespace {

template <typename Fn>
void parse_table(std::istream& is, int triangle_count, Fn&& set_row) {
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int idx;
        if (!(ls >> idx)) throw ValidationError("bad field table line: " + line);
        if (idx < 0 || idx >= triangle_count) {
            throw ValidationError("field table element index out of range: " + std::to_string(idx));
        }
        set_row(idx, ls);
    }
}

} // namespace

CoefficientField load_coefficients(std::istream& is, int triangle_count) {
    CoefficientField f;
    f.preset = "custom";
    f.values.assign(static_cast<std::size_t>(triangle_count), Tensor2{});
    parse_table(is, triangle_count, [&](int idx, std::istringstream& ls) {
        Tensor2 t;
        if (!(ls >> t.a11 >> t.a12 >> t.a22)) {
            throw ValidationError("coefficient table rows need 3 values: a11 a12 a22");
        }
        f.values[static_cast<std::size_t>(idx)] = t;
    });
    double alpha = 1e300;
    for (const Tensor2& t : f.values) alpha = std::min(alpha, t.min_eigenvalue());
    f.alpha = alpha;
    f.validate(triangle_count);
    return f;
}

DensityField load_density(std::istream& is, int triangle_count, const std::vector<double>& areas) {
    DensityField d;
    d.preset = "custom";
    d.values.assign(static_cast<std::size_t>(triangle_count), 0.0);
    parse_table(is, triangle_count, [&](int idx, std::istringstream& ls) {
        double v;
        if (!(ls >> v)) throw ValidationError("density table rows need 1 value");
        d.values[static_cast<std::size_t>(idx)] = v;
    });
    d.average = 0.0;
    for (std::size_t t = 0; t < d.values.size(); ++t) d.average += d.values[t] * areas[t];
    return d;
}

CoefficientField transfer_to_domain(const CoefficientField& cell_field, const DomainMesh& mesh) {
    cell_field.validate(mesh.reference_cell->triangle_count());
    CoefficientField f;
    f.preset = cell_field.preset;
    f.alpha = cell_field.alpha;
    f.values.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        f.values[t] = cell_field.values[static_cast<std::size_t>(mesh.local_triangle[t])];
    }
    return f;
}

DensityField transfer_to_domain(const DensityField& cell_field, const DomainMesh& mesh) {
    DensityField d;
    d.preset = cell_field.preset;
    d.values.resize(mesh.triangles.size());
    double avg = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        d.values[t] = cell_field.values[static_cast<std::size_t>(mesh.local_triangle[t])];
        avg += d.values[t] * mesh.areas[t];
    }
    d.average = avg;
    return d;
}

} // namespace perfhom
