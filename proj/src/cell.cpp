#include "perfhom/cell.hpp"

#include "perfhom/errors.hpp"

#include <json.hpp>

#include <cmath>

namespace perfhom {

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::MPos: return "M_pos";
        case Regime::MZero: return "M_zero";
        case Regime::MNeg: return "M_neg";
    }
    return "?";
}

Regime regime_from_name(const std::string& name) {
    if (name == "M_pos") return Regime::MPos;
    if (name == "M_zero") return Regime::MZero;
    if (name == "M_neg") return Regime::MNeg;
    throw ValidationError("unknown regime '" + name + "'");
}

Vec vertex_values(const DofMap& dofmap, const Vec& dof_values) {
    Vec out(dofmap.vertex_to_dof.size(), 0.0);
    for (std::size_t v = 0; v < out.size(); ++v) {
        int d = dofmap.vertex_to_dof[v];
        if (d >= 0) out[v] = dof_values[static_cast<std::size_t>(d)];
    }
    return out;
}

namespace {

struct CellSystem {
    std::shared_ptr<const DofMap> dofmap;
    SymmetricOperator stiffness;
    Vec weights;
    CellFunctionals functionals;
};

CellSystem cell_system(const CellMesh& mesh, const CoefficientField& coeff,
                       const DensityField& density) {
    CellSystem s;
    s.dofmap = std::make_shared<DofMap>(build_periodic_dofmap(mesh, true));
    s.stiffness = assemble_stiffness(mesh, coeff, s.dofmap);
    s.weights = integration_weights(mesh, *s.dofmap);
    s.functionals = assemble_functionals(mesh, coeff, density, s.dofmap);
    return s;
}

DensityField zero_density(const CellMesh& mesh) {
    DensityField d;
    d.preset = "zero";
    d.values.assign(mesh.triangles.size(), 0.0);
    d.average = 0.0;
    return d;
}

double check_mean_zero(const Vec& weights, const Vec& x) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m += weights[i] * x[i];
    return m;
}

} // namespace

Vec solve_cell_corrector(const CellMesh& mesh, const CoefficientField& coeff, int j) {
    if (j != 1 && j != 2) throw ValidationError("corrector index must be 1 or 2");
    CellSystem s = cell_system(mesh, coeff, zero_density(mesh));
    const Vec& rhs = (j == 1) ? s.functionals.l1 : s.functionals.l2;
    Vec chi = solve_mean_zero(s.stiffness, s.weights, rhs);
    if (std::abs(check_mean_zero(s.weights, chi)) > 1e-12 * mesh.solid_area) {
        throw SolverError("cell corrector lost the mean-zero constraint");
    }
    return chi;
}

Vec solve_cell_corrector_rho(const CellMesh& mesh, const CoefficientField& coeff,
                             const DensityField& density) {
    if (std::abs(density.average) > 1e-12) {
        throw ValidationError("chi^0 needs the compatibility condition M_{Y*}(rho) = 0, got M = " +
                              std::to_string(density.average));
    }
    CellSystem s = cell_system(mesh, coeff, density);
    return solve_mean_zero(s.stiffness, s.weights, s.functionals.l0);
}

namespace {

Tensor2 tensor_from_formula(const CellMesh& mesh, const CoefficientField& coeff,
                            const Vec& chi1, const Vec& chi2, bool check_asymmetry,
                            double* asymmetry_out = nullptr) {
    auto dofmap = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    CellFunctionals f = assemble_functionals(mesh, coeff, zero_density(mesh), dofmap);

    double int_a11 = 0.0, int_a12 = 0.0, int_a21 = 0.0, int_a22 = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Tensor2& a = coeff.values[t];
        int_a11 += a.a11 * mesh.areas[t];
        int_a12 += a.a12 * mesh.areas[t];
        int_a21 += a.a12 * mesh.areas[t];
        int_a22 += a.a22 * mesh.areas[t];
    }
    auto dot = [](const Vec& a, const Vec& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    // q_ij = int a_ij - l_i(chi^j)
    double q11 = int_a11 - dot(f.l1, chi1);
    double q12 = int_a12 - dot(f.l1, chi2);
    double q21 = int_a21 - dot(f.l2, chi1);
    double q22 = int_a22 - dot(f.l2, chi2);
    if (asymmetry_out) *asymmetry_out = std::abs(q12 - q21);
    if (check_asymmetry && std::abs(q12 - q21) > 1e-9) {
        throw SolverError("homogenized tensor asymmetry |q12 - q21| = " +
                          std::to_string(std::abs(q12 - q21)) + " exceeds 1e-9");
    }
    return Tensor2{q11, 0.5 * (q12 + q21), q22};
}

} // namespace

Tensor2 homogenized_tensor(const CellMesh& mesh, const CoefficientField& coeff,
                           const Vec& chi1, const Vec& chi2, double* asymmetry_out) {
    return tensor_from_formula(mesh, coeff, chi1, chi2, true, asymmetry_out);
}

Tensor2 energy_tensor(const CellMesh& mesh, const CoefficientField& coeff,
                      const Vec& chi1, const Vec& chi2) {
    auto dofmap = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    Vec v1 = vertex_values(*dofmap, chi1);
    Vec v2 = vertex_values(*dofmap, chi2);

    double q[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Tri& tri = mesh.triangles[t];
        const Point& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const Point& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const Point& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
        double det = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
        double g[3][2] = {{(p1.y - p2.y) / det, (p2.x - p1.x) / det},
                          {(p2.y - p0.y) / det, (p0.x - p2.x) / det},
                          {(p0.y - p1.y) / det, (p1.x - p0.x) / det}};
        // D(y_i - chi^i) per element
        double d1[2] = {1.0, 0.0}, d2[2] = {0.0, 1.0};
        for (int r = 0; r < 3; ++r) {
            double c1 = v1[static_cast<std::size_t>(tri[r])];
            double c2 = v2[static_cast<std::size_t>(tri[r])];
            d1[0] -= c1 * g[r][0];
            d1[1] -= c1 * g[r][1];
            d2[0] -= c2 * g[r][0];
            d2[1] -= c2 * g[r][1];
        }
        const Tensor2& a = coeff.values[t];
        double area = 0.5 * det;
        auto aform = [&](const double* x, const double* y) {
            return area * (a.a11 * x[0] * y[0] + a.a12 * (x[0] * y[1] + x[1] * y[0]) +
                           a.a22 * x[1] * y[1]);
        };
        q[0][0] += aform(d1, d1);
        q[0][1] += aform(d1, d2);
        q[1][0] += aform(d2, d1);
        q[1][1] += aform(d2, d2);
    }
    return Tensor2{q[0][0], 0.5 * (q[0][1] + q[1][0]), q[1][1]};
}

double nu_squared(const CellMesh& mesh, const CoefficientField& coeff, const Vec& chi0,
                  const DensityField& density) {
    auto dofmap = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    SymmetricOperator a = assemble_stiffness(mesh, coeff, dofmap);
    CellFunctionals f = assemble_functionals(mesh, coeff, density, dofmap);
    double nu2 = a.quadratic_form(chi0);
    if (!(nu2 > 0.0)) {
        throw SolverError("nu^2 = " + std::to_string(nu2) +
                          " is not positive; the M = 0 limit problem degenerates");
    }
    double int_rho_chi0 = 0.0;
    for (std::size_t i = 0; i < chi0.size(); ++i) int_rho_chi0 += f.l0[i] * chi0[i];
    if (std::abs(int_rho_chi0 - nu2) > 1e-8 * nu2) {
        throw SolverError("identity int rho chi0 = a(chi0, chi0) violated: " +
                          std::to_string(int_rho_chi0) + " vs " + std::to_string(nu2));
    }
    return nu2;
}

LocalSpectrum local_spectrum(const CellMesh& mesh, const CoefficientField& coeff,
                             const DensityField& density) {
    if (!(density.average > 0.0)) {
        throw ValidationError("local spectrum requires M_{Y*}(rho) > 0, got " +
                              std::to_string(density.average));
    }
    auto dofmap = std::make_shared<DofMap>(build_periodic_dofmap(mesh, false));
    SymmetricOperator k = assemble_stiffness(mesh, coeff, dofmap);
    SymmetricOperator b = assemble_weighted_mass(mesh, density, dofmap);

    DeflatedPencil dp = deflate_constants(k, b);
    TwoSidedSpectrum sp = solve_indefinite_pencil(dp.k, dp.b, 0, 1, b.inf_norm());

    LocalSpectrum ls;
    ls.lambda1neg = sp.negative.lambda[0];
    if (!(ls.lambda1neg < 0.0)) throw SolverError("first negative cell eigenvalue is not negative");
    Vec theta = dp.lift(sp.negative.vectors[0]);

    double sum = 0.0, amax = 0.0;
    for (double v : theta) {
        sum += v;
        amax = std::max(amax, std::abs(v));
    }
    if (sum < 0.0)
        for (double& v : theta) v = -v;
    double tmin = 1e300;
    for (double v : theta) tmin = std::min(tmin, v);
    if (tmin < -1e-10 * amax) {
        throw SolverError("the first negative cell eigenfunction changes sign (min " +
                          std::to_string(tmin) + "); wrong eigenvalue selected");
    }

    SymmetricOperator pm = assemble_plain_mass(mesh, dofmap);
    double n2 = pm.quadratic_form(theta);
    double scale = std::sqrt(mesh.solid_area / n2);
    for (double& v : theta) v *= scale;

    ls.int_rho_theta2 = b.quadratic_form(theta);
    if (!(ls.int_rho_theta2 < 0.0)) {
        throw SolverError("int rho theta^2 = " + std::to_string(ls.int_rho_theta2) +
                          " is not negative");
    }
    ls.theta = std::move(theta);
    return ls;
}

std::vector<double> element_squared_average(const CellMesh& mesh, const DofMap& dofmap,
                                            const Vec& dof_values) {
    Vec vv = vertex_values(dofmap, dof_values);
    std::vector<double> out(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Tri& tri = mesh.triangles[t];
        double t0 = vv[static_cast<std::size_t>(tri[0])];
        double t1 = vv[static_cast<std::size_t>(tri[1])];
        double t2 = vv[static_cast<std::size_t>(tri[2])];
        // exact element mean of the squared P1 interpolant
        out[t] = (t0 * t0 + t1 * t1 + t2 * t2 + t0 * t1 + t0 * t2 + t1 * t2) / 6.0;
    }
    return out;
}

WeightedCellData weighted_cell_data(const CellMesh& mesh, const CoefficientField& coeff,
                                    const DensityField& density, const Vec& theta) {
    DofMap dofmap = build_periodic_dofmap(mesh, false);
    std::vector<double> th2 = element_squared_average(mesh, dofmap, theta);

    WeightedCellData w;
    w.a_tilde.preset = "theta_weighted(" + coeff.preset + ")";
    w.a_tilde.values.resize(coeff.values.size());
    double alpha = 1e300;
    for (std::size_t t = 0; t < coeff.values.size(); ++t) {
        const Tensor2& a = coeff.values[t];
        w.a_tilde.values[t] = Tensor2{a.a11 * th2[t], a.a12 * th2[t], a.a22 * th2[t]};
        alpha = std::min(alpha, w.a_tilde.values[t].min_eigenvalue());
    }
    w.a_tilde.alpha = alpha;

    w.rho_tilde.preset = "theta_weighted(" + density.preset + ")";
    w.rho_tilde.values.resize(density.values.size());
    double mt = 0.0;
    for (std::size_t t = 0; t < density.values.size(); ++t) {
        w.rho_tilde.values[t] = density.values[t] * th2[t];
        mt += w.rho_tilde.values[t] * mesh.areas[t];
    }
    w.rho_tilde.average = mt;
    w.M_tilde = mt;
    if (!(mt < 0.0)) {
        throw SolverError("M_{Y*}(rho_tilde) = " + std::to_string(mt) +
                          " is not negative; theta normalization or sign is broken");
    }

    w.chi_tilde1 = solve_cell_corrector(mesh, w.a_tilde, 1);
    w.chi_tilde2 = solve_cell_corrector(mesh, w.a_tilde, 2);
    w.q_tilde = homogenized_tensor(mesh, w.a_tilde, w.chi_tilde1, w.chi_tilde2);
    if (!(w.q_tilde.min_eigenvalue() > 0.0)) {
        throw SolverError("q_tilde lost positive definiteness");
    }
    return w;
}

HomogenizedModel build_homogenized_model(const CellGeometry& geom, const std::string& coeff_preset,
                                         const std::string& density_case) {
    auto mesh = std::make_shared<CellMesh>(build_cell_mesh(geom));
    CoefficientField coeff = preset_coefficients(coeff_preset, *mesh);
    DensityField density = preset_density(density_case, *mesh);
    return build_homogenized_model(std::move(mesh), std::move(coeff), std::move(density));
}

HomogenizedModel build_homogenized_model(std::shared_ptr<const CellMesh> mesh,
                                         CoefficientField coeff, DensityField density) {
    coeff.validate(mesh->triangle_count());
    validate_indefinite(density, mesh->areas);

    HomogenizedModel model;
    model.mesh = mesh;
    model.dofmap = std::make_shared<DofMap>(build_periodic_dofmap(*mesh, false));
    model.M = density.average;
    if (model.M > 1e-12) {
        model.regime = Regime::MPos;
    } else if (model.M < -1e-12) {
        model.regime = Regime::MNeg;
    } else {
        model.regime = Regime::MZero;
    }

    model.chi1 = solve_cell_corrector(*mesh, coeff, 1);
    model.chi2 = solve_cell_corrector(*mesh, coeff, 2);
    model.q = homogenized_tensor(*mesh, coeff, model.chi1, model.chi2);
    if (!(model.q.min_eigenvalue() > 0.0)) {
        throw SolverError("homogenized tensor lost positive definiteness");
    }

    if (model.regime == Regime::MZero) {
        model.chi0 = solve_cell_corrector_rho(*mesh, coeff, density);
        model.nu2 = nu_squared(*mesh, coeff, *model.chi0, density);
    } else if (model.regime == Regime::MPos) {
        LocalSpectrum ls = local_spectrum(*mesh, coeff, density);
        model.lambda1neg = ls.lambda1neg;
        WeightedCellData w = weighted_cell_data(*mesh, coeff, density, ls.theta);
        model.theta1neg = std::move(ls.theta);
        model.a_tilde = std::move(w.a_tilde);
        model.rho_tilde = std::move(w.rho_tilde);
        model.q_tilde = w.q_tilde;
        model.chi_tilde1 = std::move(w.chi_tilde1);
        model.chi_tilde2 = std::move(w.chi_tilde2);
        model.M_tilde = w.M_tilde;
    }
    // M < 0 carries only the density-independent pieces; the sweep pipeline
    // reduces that regime to M > 0 with -rho

    model.coeff = std::move(coeff);
    model.density = std::move(density);
    return model;
}

std::string HomogenizedModel::to_json() const {
    nlohmann::json j;
    j["regime"] = regime_name(regime);
    j["m"] = mesh->m;
    j["M"] = M;
    j["q"] = {{q.a11, q.a12}, {q.a12, q.a22}};
    j["coeff_preset"] = coeff.preset;
    j["density_case"] = density.preset;
    j["alpha"] = coeff.alpha;
    j["chi1"] = chi1;
    j["chi2"] = chi2;
    if (chi0) j["chi0"] = *chi0;
    if (nu2) j["nu2"] = *nu2;
    if (lambda1neg) j["lambda1neg"] = *lambda1neg;
    if (theta1neg) j["theta1neg"] = *theta1neg;
    if (q_tilde) j["q_tilde"] = {{q_tilde->a11, q_tilde->a12}, {q_tilde->a12, q_tilde->a22}};
    if (chi_tilde1) j["chi_tilde1"] = *chi_tilde1;
    if (chi_tilde2) j["chi_tilde2"] = *chi_tilde2;
    if (M_tilde) j["M_tilde"] = *M_tilde;
    return j.dump(2);
}

std::uint64_t HomogenizedModel::hash() const {
    std::string doc = to_json();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : doc) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace perfhom
