#include "perfhom/harness.hpp"

#include "perfhom/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <sstream>
#include <thread>

namespace perfhom {

int worker_threads() {
    if (const char* env = std::getenv("PERFHOM_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(hw == 0 ? 1u : hw, 4u));
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void SweepPlan::validate() const {
    if (n_list.empty()) throw ValidationError("sweep needs at least one n");
    for (std::size_t i = 1; i < n_list.size(); ++i) {
        if (n_list[i] <= n_list[i - 1]) {
            throw ValidationError("sweep n-list must be strictly increasing (eps strictly decreasing)");
        }
    }
    if (n_list.front() < 1) throw ValidationError("n must be positive");
    if (cell_m != s) {
        throw ValidationError("cell resolution m must equal the domain subdivision s for exact "
                              "cell/domain alignment");
    }
    if (hole == "square" || hole == "polygon") {
        if (s % 8 != 0 || s < 8) throw ValidationError("s must be a positive multiple of 8");
        if (cell_m % 8 != 0 || cell_m < 8) throw ValidationError("m must be a positive multiple of 8");
    }
    if (limit_grid < 8) throw ValidationError("limit grid must be at least 8");
    if (count_pos < 1 || count_neg < 1) throw ValidationError("eigenpair counts must be positive");
    bool pos = density_case == "positive_avg";
    bool zero = density_case == "zero_avg";
    bool neg = density_case == "negative_avg";
    if (!pos && !zero && !neg) throw ValidationError("unknown density case '" + density_case + "'");
    if ((regime == Regime::MPos && !pos) || (regime == Regime::MZero && !zero) ||
        (regime == Regime::MNeg && !neg)) {
        throw ValidationError("regime " + regime_name(regime) + " does not match density case '" +
                              density_case + "'");
    }
}

namespace {

CellGeometry make_geometry(const std::string& hole, int m) {
    if (hole == "square") return CellGeometry::square_hole(m);
    if (hole == "polygon") return CellGeometry::polygon_hole(m);
    if (hole == "none") return CellGeometry::no_hole(m);
    throw ValidationError("unknown hole preset '" + hole + "'");
}

Vec sample_psi0(const DomainMesh& mesh) {
    Vec out(mesh.vertices.size());
    for (std::size_t v = 0; v < out.size(); ++v) {
        const Point& p = mesh.vertices[v];
        out[v] = 16.0 * p.x * (1.0 - p.x) * p.y * (1.0 - p.y);
    }
    return out;
}

struct PairingTarget {
    double value = 0.0;
};

// iint u1(x,y) psi0(x) rho(y) dy dx for the pencil corrector u1
PairingTarget pairing_limit_target(const HomogenizedModel& model, const LimitSolution& limit,
                                   int k) {
    auto dofmap_nz = std::make_shared<DofMap>(build_periodic_dofmap(*model.mesh, false));
    CellFunctionals f = assemble_functionals(*model.mesh, model.coeff, model.density, dofmap_nz);
    auto dot = [](const Vec& a, const Vec& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    double int_rho_chi1 = dot(f.l0, model.chi1);
    double int_rho_chi2 = dot(f.l0, model.chi2);
    double int_rho_chi0 = dot(f.l0, *model.chi0);

    const DomainMesh& lm = *limit.mesh;
    Vec u0v = vertex_values(*limit.dofmap, limit.eigenfunctions[static_cast<std::size_t>(k - 1)]);
    Vec psi0 = sample_psi0(lm);
    double int_u0_psi0 = 0.0;
    double int_du0_psi0[2] = {0.0, 0.0};
    for (std::size_t t = 0; t < lm.triangles.size(); ++t) {
        const Tri& tri = lm.triangles[t];
        double u[3], p[3];
        for (int r = 0; r < 3; ++r) {
            u[r] = u0v[static_cast<std::size_t>(tri[r])];
            p[r] = psi0[static_cast<std::size_t>(tri[r])];
        }
        double su = u[0] + u[1] + u[2], sp = p[0] + p[1] + p[2];
        int_u0_psi0 += lm.areas[t] / 12.0 * (su * sp + u[0] * p[0] + u[1] * p[1] + u[2] * p[2]);
        auto g = triangle_gradient(lm, t, u0v);
        int_du0_psi0[0] += g[0] * lm.areas[t] / 3.0 * sp;
        int_du0_psi0[1] += g[1] * lm.areas[t] / 3.0 * sp;
    }
    double lam0 = limit.eigenvalues[static_cast<std::size_t>(k - 1)];
    PairingTarget t;
    t.value = lam0 * int_u0_psi0 * int_rho_chi0 -
              (int_du0_psi0[0] * int_rho_chi1 + int_du0_psi0[1] * int_rho_chi2);
    return t;
}

// run tasks with at most `cap` in flight, preserving slot order of results
void run_capped(std::vector<std::function<void()>>& tasks, int cap) {
    if (cap <= 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::size_t next = 0;
    while (next < tasks.size()) {
        std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cap), tasks.size() - next);
        std::vector<std::future<void>> fut;
        for (std::size_t i = 0; i < batch; ++i) {
            fut.push_back(std::async(std::launch::async, tasks[next + i]));
        }
        for (auto& f : fut) f.get();
        next += batch;
    }
}

struct EpsRows {
    std::vector<SweepRow> rows;
    double wall_ms = 0.0;
};

} // namespace

CorrectorEnergy corrector_energy(const EpsSolution& sol, const FilledDomain& fd,
                                 const CorrectorSampler& sampler, int k, char side) {
    const SpectrumSide& ss = (side == '+') ? sol.spectrum.positive : sol.spectrum.negative;
    Vec u_vertex = vertex_values(*sol.dofmap, ss.vectors.at(static_cast<std::size_t>(k - 1)));
    Vec u_ext = harmonic_extension(*sol.mesh, fd, u_vertex);

    const DomainMesh& filled = *fd.filled;
    double align = 0.0;
    for (std::size_t v = 0; v < u_ext.size(); ++v) {
        const Point& p = filled.vertices[v];
        align += u_ext[v] * sampler.u0_at(p.x, p.y);
    }
    if (align < 0.0) {
        for (double& x : u_ext) x = -x;
        for (double& x : u_vertex) x = -x;
    }

    CorrectorEnergy ce;
    double e_with = 0.0, e_plain = 0.0;
    for (std::size_t t = 0; t < filled.triangles.size(); ++t) {
        auto gu = triangle_gradient(filled, t, u_ext);
        const Tri& tri = filled.triangles[t];
        double cx = 0.0, cy = 0.0;
        for (int r = 0; r < 3; ++r) {
            cx += filled.vertices[static_cast<std::size_t>(tri[r])].x / 3.0;
            cy += filled.vertices[static_cast<std::size_t>(tri[r])].y / 3.0;
        }
        auto g0 = sampler.du0_at(cx, cy);
        auto gy = sampler.corrector_gradient(cx, cy, filled.local_triangle[t]);
        double dwx = gu[0] - g0[0] - gy[0];
        double dwy = gu[1] - g0[1] - gy[1];
        double dpx = gu[0] - g0[0];
        double dpy = gu[1] - g0[1];
        e_with += filled.areas[t] * (dwx * dwx + dwy * dwy);
        e_plain += filled.areas[t] * (dpx * dpx + dpy * dpy);
    }
    ce.with_corrector = std::sqrt(e_with);
    ce.without_corrector = std::sqrt(e_plain);
    ce.extension_ratio = extension_gradient_ratio(*sol.mesh, fd, u_vertex, u_ext);
    return ce;
}

FactorizationResidual factorization_residual(const EpsSolution& sol, const EpsSolution& weighted,
                                             const HomogenizedModel& model, int k) {
    if (sol.mesh.get() != weighted.mesh.get()) {
        throw ValidationError("factorization residual needs both solves on the same mesh");
    }
    if (!model.theta1neg || !model.lambda1neg) {
        throw ValidationError("factorization residual needs the local spectrum in the model");
    }
    const DomainMesh& mesh = *sol.mesh;
    Vec u = vertex_values(*sol.dofmap, sol.spectrum.negative.vectors.at(static_cast<std::size_t>(k - 1)));
    Vec v = vertex_values(*weighted.dofmap,
                          weighted.spectrum.negative.vectors.at(static_cast<std::size_t>(k - 1)));
    Vec theta_cell = vertex_values(*model.dofmap, *model.theta1neg);

    Vec tv(u.size());
    for (std::size_t w = 0; w < u.size(); ++w) {
        int cv = mesh.local_vertex[w];
        tv[w] = theta_cell[static_cast<std::size_t>(cv)] * v[w];
    }
    if (plain_l2_product(mesh, u, tv) < 0.0) {
        for (double& x : tv) x = -x;
    }
    Vec diff(u.size());
    for (std::size_t w = 0; w < u.size(); ++w) diff[w] = u[w] - tv[w];

    FactorizationResidual fr;
    fr.residual = std::sqrt(plain_l2_product(mesh, diff, diff) / plain_l2_product(mesh, u, u));
    double shift = sol.spectrum.negative.lambda[static_cast<std::size_t>(k - 1)] -
                   *model.lambda1neg * mesh.n * mesh.n;
    fr.o1 = std::abs(shift - weighted.spectrum.negative.lambda[static_cast<std::size_t>(k - 1)]);
    return fr;
}

namespace {

ConvergenceReport run_sweep_mpos(const SweepPlan& plan) {
    CellGeometry geom = make_geometry(plan.hole, plan.cell_m);
    HomogenizedModel model = build_homogenized_model(geom, plan.coeff_preset, plan.density_case);
    if (model.regime != Regime::MPos) {
        throw ValidationError("density case '" + plan.density_case + "' is not in the M > 0 regime");
    }

    LimitSolution limit_pos, limit_neg;
    {
        std::vector<std::function<void()>> tasks;
        tasks.push_back([&] { limit_pos = limit_positive(model.q, model.M, plan.count_pos, plan.limit_grid); });
        tasks.push_back([&] {
            limit_neg = limit_negative(*model.q_tilde, *model.M_tilde, plan.count_neg, plan.limit_grid);
        });
        run_capped(tasks, worker_threads());
    }

    std::vector<EpsRows> per_n(plan.n_list.size());
    std::vector<std::function<void()>> tasks;
    for (std::size_t i = 0; i < plan.n_list.size(); ++i) {
        tasks.push_back([&, i] {
            auto t0 = std::chrono::steady_clock::now();
            int n = plan.n_list[i];
            auto mesh = std::make_shared<DomainMesh>(
                build_domain_mesh(n, plan.s, make_geometry(plan.hole, plan.s), plan.dof_budget));
            CoefficientField coeff_d = transfer_to_domain(model.coeff, *mesh);
            DensityField rho_d = transfer_to_domain(model.density, *mesh);
            EpsSolution sol = solve_eps_spectrum(mesh, coeff_d, rho_d, plan.count_pos, plan.count_neg,
                                                 NormalizationTag::BSigned);
            EpsSolution solw;
            if (plan.factorization) {
                CoefficientField at_d = transfer_to_domain(*model.a_tilde, *mesh);
                DensityField rt_d = transfer_to_domain(*model.rho_tilde, *mesh);
                solw = solve_eps_spectrum(mesh, at_d, rt_d, 1, plan.count_neg,
                                          NormalizationTag::BSigned);
            }

            std::optional<FilledDomain> fd;
            std::optional<CorrectorSampler> sampler;
            if (plan.corrector) {
                fd = make_filled_domain(*mesh);
                sampler.emplace(model, limit_pos, 1);
            }

            EpsRows& out = per_n[i];
            for (int k = 1; k <= plan.count_pos; ++k) {
                SweepRow r;
                r.regime = regime_name(plan.regime);
                r.n = n;
                r.eps = 1.0 / n;
                r.k = k;
                r.side = '+';
                r.lambda_raw = sol.spectrum.positive.lambda[static_cast<std::size_t>(k - 1)];
                r.lambda_transformed = r.lambda_raw;
                r.limit = limit_pos.eigenvalues[static_cast<std::size_t>(k - 1)];
                r.abs_err = std::abs(r.lambda_transformed - r.limit);
                r.rel_err = r.abs_err / std::abs(r.limit);
                if (plan.corrector && k == 1) {
                    CorrectorEnergy ce = corrector_energy(sol, *fd, *sampler, 1, '+');
                    r.corrector_e = ce.with_corrector;
                    r.corrector_e_plain = ce.without_corrector;
                    r.extension_ratio = ce.extension_ratio;
                }
                out.rows.push_back(std::move(r));
            }
            for (int k = 1; k <= plan.count_neg; ++k) {
                SweepRow r;
                r.regime = regime_name(plan.regime);
                r.n = n;
                r.eps = 1.0 / n;
                r.k = k;
                r.side = '-';
                r.lambda_raw = sol.spectrum.negative.lambda[static_cast<std::size_t>(k - 1)];
                r.lambda_transformed = r.lambda_raw - *model.lambda1neg * n * n;
                r.limit = limit_neg.eigenvalues[static_cast<std::size_t>(k - 1)];
                r.abs_err = std::abs(r.lambda_transformed - r.limit);
                r.rel_err = r.abs_err / std::abs(r.limit);
                if (plan.factorization && k == 1) {
                    FactorizationResidual fr = factorization_residual(sol, solw, model, 1);
                    r.factor_resid = fr.residual;
                    r.o1_resid = fr.o1;
                }
                out.rows.push_back(std::move(r));
            }
            out.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0).count();
        });
    }
    run_capped(tasks, worker_threads());

    ConvergenceReport rep;
    rep.plan = plan;
    rep.model_hash = model.hash();
    rep.limit_values = limit_pos.eigenvalues;
    for (auto& pn : per_n) {
        for (auto& r : pn.rows) rep.rows.push_back(std::move(r));
        rep.wall_ms.push_back(pn.wall_ms);
    }
    return rep;
}

ConvergenceReport run_sweep_mzero(const SweepPlan& plan) {
    CellGeometry geom = make_geometry(plan.hole, plan.cell_m);
    HomogenizedModel model = build_homogenized_model(geom, plan.coeff_preset, plan.density_case);
    if (model.regime != Regime::MZero) {
        throw ValidationError("density case '" + plan.density_case + "' is not in the M = 0 regime");
    }

    int count = std::max(plan.count_pos, plan.count_neg);
    LimitSolution limit = limit_pencil(model.q, *model.nu2, count, plan.limit_grid);

    std::optional<PairingTarget> ptarget;
    if (plan.pairing) ptarget = pairing_limit_target(model, limit, 1);

    std::vector<EpsRows> per_n(plan.n_list.size());
    std::vector<std::function<void()>> tasks;
    for (std::size_t i = 0; i < plan.n_list.size(); ++i) {
        tasks.push_back([&, i] {
            auto t0 = std::chrono::steady_clock::now();
            int n = plan.n_list[i];
            auto mesh = std::make_shared<DomainMesh>(
                build_domain_mesh(n, plan.s, make_geometry(plan.hole, plan.s), plan.dof_budget));
            CoefficientField coeff_d = transfer_to_domain(model.coeff, *mesh);
            DensityField rho_d = transfer_to_domain(model.density, *mesh);
            EpsSolution sol = solve_eps_spectrum(mesh, coeff_d, rho_d, plan.count_pos, plan.count_neg,
                                                 NormalizationTag::BScaledEps);

            std::optional<FilledDomain> fd;
            std::optional<CorrectorSampler> sampler;
            if (plan.corrector || plan.pairing) fd = make_filled_domain(*mesh);
            if (plan.corrector) sampler.emplace(model, limit, 1, true);

            EpsRows& out = per_n[i];
            for (char side : {'+', '-'}) {
                const SpectrumSide& ss =
                    (side == '+') ? sol.spectrum.positive : sol.spectrum.negative;
                int cnt = (side == '+') ? plan.count_pos : plan.count_neg;
                for (int k = 1; k <= cnt; ++k) {
                    SweepRow r;
                    r.regime = regime_name(plan.regime);
                    r.n = n;
                    r.eps = 1.0 / n;
                    r.k = k;
                    r.side = side;
                    r.lambda_raw = ss.lambda[static_cast<std::size_t>(k - 1)];
                    r.lambda_transformed = r.lambda_raw / n;
                    r.limit = (side == '+') ? limit.lambda_plus(k - 1) : limit.lambda_minus(k - 1);
                    r.abs_err = std::abs(r.lambda_transformed - r.limit);
                    r.rel_err = r.abs_err / std::abs(r.limit);
                    if (side == '+' && k == 1) {
                        if (plan.corrector) {
                            CorrectorEnergy ce = corrector_energy(sol, *fd, *sampler, 1, '+');
                            r.corrector_e = ce.with_corrector;
                            r.corrector_e_plain = ce.without_corrector;
                            r.extension_ratio = ce.extension_ratio;
                        }
                        if (plan.pairing) {
                            Vec u_vertex = vertex_values(*sol.dofmap, ss.vectors[0]);
                            Vec u_ext = harmonic_extension(*mesh, *fd, u_vertex);
                            // sign-align against u0 before pairing
                            CorrectorSampler align_s = sampler ? *sampler
                                                               : CorrectorSampler(model, limit, 1, true);
                            double align = 0.0;
                            for (std::size_t v = 0; v < u_ext.size(); ++v) {
                                const Point& p = fd->filled->vertices[v];
                                align += u_ext[v] * align_s.u0_at(p.x, p.y);
                            }
                            if (align < 0.0)
                                for (double& x : u_ext) x = -x;
                            CellFactor psi1 = CellFactor::from_cell_element_field(
                                *model.mesh, model.density.values, 0.0);
                            Vec psi0 = sample_psi0(*fd->filled);
                            double pv = scaled_pairing(*fd, u_ext, psi0, psi1);
                            r.pairing_value = pv;
                            r.pairing_limit = ptarget->value;
                            r.pairing_err = std::abs(pv - ptarget->value);
                        }
                    }
                    out.rows.push_back(std::move(r));
                }
            }
            out.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0).count();
        });
    }
    run_capped(tasks, worker_threads());

    ConvergenceReport rep;
    rep.plan = plan;
    rep.model_hash = model.hash();
    rep.limit_values = limit.eigenvalues;
    for (auto& pn : per_n) {
        for (auto& r : pn.rows) rep.rows.push_back(std::move(r));
        rep.wall_ms.push_back(pn.wall_ms);
    }
    return rep;
}

ConvergenceReport run_sweep_mneg(const SweepPlan& plan) {
    // the M < 0 regime is the M > 0 regime for -rho with the sequences swapped
    SweepPlan mirrored = plan;
    mirrored.regime = Regime::MPos;
    mirrored.density_case = "positive_avg";
    std::swap(mirrored.count_pos, mirrored.count_neg);
    ConvergenceReport rep = run_sweep_mpos(mirrored);

    rep.plan = plan;
    for (SweepRow& r : rep.rows) {
        r.regime = regime_name(Regime::MNeg);
        r.side = (r.side == '+') ? '-' : '+';
        r.lambda_raw = -r.lambda_raw;
        r.lambda_transformed = -r.lambda_transformed;
        r.limit = -r.limit;
    }
    // keep the row order convention: '+' before '-' within each n
    std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.n != b.n) return a.n < b.n;
        if (a.side != b.side) return a.side == '+';
        return a.k < b.k;
    });
    for (double& v : rep.limit_values) v = -v;
    return rep;
}

} // namespace

ConvergenceReport run_sweep(const SweepPlan& plan) {
    plan.validate();
    switch (plan.regime) {
        case Regime::MPos: return run_sweep_mpos(plan);
        case Regime::MZero: return run_sweep_mzero(plan);
        case Regime::MNeg: return run_sweep_mneg(plan);
    }
    throw ValidationError("unknown regime");
}

// ---------------- report emission ----------------

namespace {

nlohmann::json plan_to_json(const SweepPlan& p) {
    nlohmann::json j;
    j["regime"] = regime_name(p.regime);
    j["n"] = p.n_list;
    j["cell_m"] = p.cell_m;
    j["s"] = p.s;
    j["limit_grid"] = p.limit_grid;
    j["count_pos"] = p.count_pos;
    j["count_neg"] = p.count_neg;
    j["hole"] = p.hole;
    j["coeff"] = p.coeff_preset;
    j["density"] = p.density_case;
    j["corrector"] = p.corrector;
    j["factorization"] = p.factorization;
    j["pairing"] = p.pairing;
    j["dof_budget"] = p.dof_budget;
    j["seed"] = p.seed;
    return j;
}

} // namespace

std::string ConvergenceReport::to_csv() const {
    std::ostringstream os;
    os << "regime,n,eps,k,side,lambda_raw,lambda_transformed,limit,abs_err,rel_err,"
          "corrector_E,factor_resid\n";
    for (const SweepRow& r : rows) {
        os << r.regime << ',' << r.n << ',' << format_double(r.eps) << ',' << r.k << ',' << r.side
           << ',' << format_double(r.lambda_raw) << ',' << format_double(r.lambda_transformed)
           << ',' << format_double(r.limit) << ',' << format_double(r.abs_err) << ','
           << format_double(r.rel_err) << ',';
        if (r.corrector_e) os << format_double(*r.corrector_e);
        os << ',';
        if (r.factor_resid) os << format_double(*r.factor_resid);
        os << '\n';
    }
    return os.str();
}

std::string ConvergenceReport::to_json() const {
    nlohmann::json j;
    j["plan"] = plan_to_json(plan);
    j["meta"]["model_hash"] = model_hash;
    j["meta"]["version"] = version;
    if (plan.record_timings) j["meta"]["wall_ms"] = wall_ms;
    j["limit_values"] = limit_values;
    nlohmann::json rows_json = nlohmann::json::array();
    for (const SweepRow& r : rows) {
        nlohmann::json rj;
        rj["regime"] = r.regime;
        rj["n"] = r.n;
        rj["eps"] = r.eps;
        rj["k"] = r.k;
        rj["side"] = std::string(1, r.side);
        rj["lambda_raw"] = r.lambda_raw;
        rj["lambda_transformed"] = r.lambda_transformed;
        rj["limit"] = r.limit;
        rj["abs_err"] = r.abs_err;
        rj["rel_err"] = r.rel_err;
        if (r.corrector_e) rj["corrector_E"] = *r.corrector_e;
        if (r.corrector_e_plain) rj["corrector_E_plain"] = *r.corrector_e_plain;
        if (r.factor_resid) rj["factor_resid"] = *r.factor_resid;
        if (r.o1_resid) rj["o1_resid"] = *r.o1_resid;
        if (r.pairing_value) rj["pairing_value"] = *r.pairing_value;
        if (r.pairing_limit) rj["pairing_limit"] = *r.pairing_limit;
        if (r.pairing_err) rj["pairing_err"] = *r.pairing_err;
        if (r.extension_ratio) rj["extension_ratio"] = *r.extension_ratio;
        rows_json.push_back(std::move(rj));
    }
    j["rows"] = std::move(rows_json);
    return j.dump(2);
}

namespace {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points; // (eps, value)
};

void write_svg(const std::string& path, const std::string& title, const std::vector<Series>& series) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Series& s : series) {
        for (auto [x, y] : s.points) {
            double ly = std::log10(std::max(y, 1e-16));
            double lx = std::log10(x);
            xmin = std::min(xmin, lx);
            xmax = std::max(xmax, lx);
            ymin = std::min(ymin, ly);
            ymax = std::max(ymax, ly);
        }
    }
    if (xmin > xmax) {
        xmin = -1;
        xmax = 0;
        ymin = -1;
        ymax = 0;
    }
    if (xmax - xmin < 1e-9) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-9) ymax = ymin + 1.0;
    const double w = 500, h = 360, ml = 60, mr = 20, mt = 30, mb = 40;
    auto mapx = [&](double lx) { return ml + (lx - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto mapy = [&](double ly) { return h - mb - (ly - ymin) / (ymax - ymin) * (h - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::ofstream os(path);
    if (!os) throw ValidationError("cannot write " + path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << title
       << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (w - mr) << "\" y=\"" << h - 10 << "\" text-anchor=\"end\" font-size=\"11\">"
       << "log10(eps)</text>\n";
    os << "<text x=\"8\" y=\"" << mt << "\" font-size=\"11\">log10</text>\n";
    int ci = 0;
    for (const Series& s : series) {
        std::ostringstream pts;
        for (auto [x, y] : s.points) {
            pts << format_double(mapx(std::log10(x))) << ","
                << format_double(mapy(std::log10(std::max(y, 1e-16)))) << " ";
        }
        const char* col = colors[ci % 6];
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\""
           << pts.str() << "\"/>\n";
        for (auto [x, y] : s.points) {
            os << "<circle cx=\"" << format_double(mapx(std::log10(x))) << "\" cy=\""
               << format_double(mapy(std::log10(std::max(y, 1e-16)))) << "\" r=\"2.5\" fill=\"" << col
               << "\"/>\n";
        }
        os << "<text x=\"" << w - mr - 4 << "\" y=\"" << mt + 14 * (ci + 1)
           << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << col << "\">" << s.label
           << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
}

} // namespace

std::vector<std::string> emit_report(const ConvergenceReport& report,
                                     const std::vector<std::string>& formats,
                                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    std::string regime = regime_name(report.plan.regime);

    auto want = [&](const std::string& f) {
        return std::find(formats.begin(), formats.end(), f) != formats.end();
    };

    if (want("csv")) {
        std::string path = (fs::path(out_dir) / (regime + "_sweep.csv")).string();
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ValidationError("cannot write " + path);
        os << report.to_csv();
        written.push_back(path);
    }
    if (want("json")) {
        std::string path = (fs::path(out_dir) / (regime + "_sweep.json")).string();
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ValidationError("cannot write " + path);
        os << report.to_json();
        written.push_back(path);
    }
    if (want("svg")) {
        auto collect = [&](auto getter, const std::string& quantity) {
            std::map<std::pair<char, int>, Series> by_key;
            for (const SweepRow& r : report.rows) {
                auto v = getter(r);
                if (!v) continue;
                auto key = std::make_pair(r.side, r.k);
                Series& s = by_key[key];
                s.label = quantity + " k=" + std::to_string(r.k) + r.side;
                s.points.emplace_back(r.eps, *v);
            }
            std::vector<Series> out;
            for (auto& [k, s] : by_key) {
                std::sort(s.points.begin(), s.points.end(),
                          [](auto& a, auto& b) { return a.first > b.first; });
                out.push_back(std::move(s));
            }
            return out;
        };
        struct Spec {
            std::string name;
            std::function<std::optional<double>(const SweepRow&)> getter;
        };
        std::vector<Spec> specs = {
            {"abs_err", [](const SweepRow& r) { return std::optional<double>(r.abs_err); }},
            {"corrector", [](const SweepRow& r) { return r.corrector_e; }},
            {"factor_resid", [](const SweepRow& r) { return r.factor_resid; }},
            {"pairing_err", [](const SweepRow& r) { return r.pairing_err; }},
        };
        for (const Spec& sp : specs) {
            auto series = collect(sp.getter, sp.name);
            if (series.empty()) continue;
            std::string path = (fs::path(out_dir) / (regime + "_" + sp.name + ".svg")).string();
            write_svg(path, regime + " " + sp.name, series);
            written.push_back(path);
        }
    }
    return written;
}

} // namespace perfhom
