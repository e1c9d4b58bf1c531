#include "perfhom/acceptance.hpp"

#include "perfhom/cell.hpp"
#include "perfhom/config.hpp"
#include "perfhom/errors.hpp"
#include "perfhom/finescale.hpp"
#include "perfhom/harness.hpp"
#include "perfhom/limits.hpp"
#include "perfhom/pencil.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

namespace perfhom {

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<void()> body; // throws on failure
};

struct CheckFail : Error {
    explicit CheckFail(const std::string& m) : Error(m) {}
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFail(what);
}

struct XorShift64 {
    std::uint64_t s;
    explicit XorShift64(std::uint64_t seed) : s(seed ? seed : 1u) {}
    std::uint64_t next_u64() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return s;
    }
    double uniform() { return (static_cast<double>(next_u64() >> 11) / 9007199254740992.0) * 2.0 - 1.0; }
};

const SweepRow& find_row(const ConvergenceReport& rep, int n, int k, char side) {
    for (const SweepRow& r : rep.rows) {
        if (r.n == n && r.k == k && r.side == side) return r;
    }
    throw CheckFail("missing sweep row n=" + std::to_string(n) + " k=" + std::to_string(k) +
                    " side=" + std::string(1, side));
}

std::string fmt(double v) { return format_double(v); }

} // namespace

int run_acceptance(std::ostream& os) {
    os << "perfhom acceptance suite\n";
    const int threads = worker_threads();
    os << "worker threads: " << threads << "\n";

    // shared heavy artifacts
    std::optional<ConvergenceReport> mpos_rep, mzero_rep;

    auto mpos_report = [&]() -> const ConvergenceReport& {
        if (!mpos_rep) {
            SweepPlan p;
            p.regime = Regime::MPos;
            p.density_case = "positive_avg";
            p.n_list = {2, 4, 8};
            mpos_rep = run_sweep(p);
        }
        return *mpos_rep;
    };
    auto mzero_report = [&]() -> const ConvergenceReport& {
        if (!mzero_rep) {
            SweepPlan p;
            p.regime = Regime::MZero;
            p.density_case = "zero_avg";
            p.n_list = {2, 4, 8};
            mzero_rep = run_sweep(p);
        }
        return *mzero_rep;
    };

    std::vector<Criterion> criteria;

    criteria.push_back({1, "tensor exactness (identity -> Id, layered -> diag(sqrt3, 2))", [&] {
        CellMesh cm = build_cell_mesh(CellGeometry::no_hole(8));
        CoefficientField id = preset_coefficients("identity", cm);
        Vec c1 = solve_cell_corrector(cm, id, 1);
        Vec c2 = solve_cell_corrector(cm, id, 2);
        Tensor2 q = homogenized_tensor(cm, id, c1, c2);
        require(std::abs(q.a11 - 1.0) <= 1e-12 && std::abs(q.a22 - 1.0) <= 1e-12 &&
                    std::abs(q.a12) <= 1e-12,
                "identity no-hole q != Id: q11=" + fmt(q.a11) + " q12=" + fmt(q.a12) +
                    " q22=" + fmt(q.a22));

        CellMesh cm64 = build_cell_mesh(CellGeometry::no_hole(64));
        CoefficientField lay = preset_coefficients("layered", cm64);
        Vec l1 = solve_cell_corrector(cm64, lay, 1);
        Vec l2 = solve_cell_corrector(cm64, lay, 2);
        Tensor2 ql = homogenized_tensor(cm64, lay, l1, l2);
        const double s3 = std::sqrt(3.0);
        require(std::abs(ql.a11 - s3) <= 1e-6 * s3, "layered q11 = " + fmt(ql.a11) +
                                                        " vs sqrt(3), rel err " +
                                                        fmt(std::abs(ql.a11 - s3) / s3));
        require(std::abs(ql.a22 - 2.0) <= 1e-6 * 2.0, "layered q22 = " + fmt(ql.a22) + " vs 2");
        require(std::abs(ql.a12) <= 1e-9, "layered q12 = " + fmt(ql.a12) + " not ~0");
    }});

    criteria.push_back({2, "tensor structure (q, q_tilde symmetric and SPD for all presets)", [&] {
        for (const std::string& coeff : {"identity", "layered"}) {
            for (const std::string& hole : {"square", "none"}) {
                CellGeometry g = (hole == "square") ? CellGeometry::square_hole(8)
                                                    : CellGeometry::no_hole(8);
                CellMesh cm = build_cell_mesh(g);
                CoefficientField cf = preset_coefficients(coeff, cm);
                Vec c1 = solve_cell_corrector(cm, cf, 1);
                Vec c2 = solve_cell_corrector(cm, cf, 2);
                double asym = 0.0;
                Tensor2 q = homogenized_tensor(cm, cf, c1, c2, &asym);
                require(asym <= 1e-10, coeff + "/" + hole + ": |q12-q21| = " + fmt(asym));
                require(q.min_eigenvalue() > 0.0, coeff + "/" + hole + ": q not SPD");
            }
            HomogenizedModel model = build_homogenized_model(CellGeometry::square_hole(8), coeff,
                                                             "positive_avg");
            double asym_t = 0.0;
            Tensor2 qt = homogenized_tensor(*model.mesh, *model.a_tilde, *model.chi_tilde1,
                                            *model.chi_tilde2, &asym_t);
            require(asym_t <= 1e-10, coeff + ": |qt12-qt21| = " + fmt(asym_t));
            require(qt.min_eigenvalue() > 0.0, coeff + ": q_tilde not SPD");
        }
    }});

    criteria.push_back({3, "indefinite pencil oracle equivalence (100 seeded instances)", [&] {
        XorShift64 rng(20240811u);
        for (int inst = 0; inst < 100; ++inst) {
            int n = 2 + static_cast<int>(rng.next_u64() % 29); // 2..30
            DenseMatrix a(n, n), b(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a(i, j) = rng.uniform();
            for (int i = 0; i < n; ++i) {
                for (int j = i; j < n; ++j) {
                    double v = rng.uniform();
                    b(i, j) = v;
                    b(j, i) = v;
                }
            }
            DenseMatrix k(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int l = 0; l < n; ++l) s += a(l, i) * a(l, j);
                    k(i, j) = s;
                }
                k(i, i) += 0.5 * n;
            }

            // oracle: full Jacobi decomposition of the congruence-transformed matrix
            DenseMatrix l = cholesky(k);
            DenseMatrix c = b;
            forward_solve_multi(l, c);
            c = c.transposed();
            forward_solve_multi(l, c);
            c.symmetrize();
            EigResult oracle = dense_eig_oracle(c);

            double bn = 0.0;
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) s += std::abs(b(i, j));
                bn = std::max(bn, s);
            }
            double tol = 1e-12 * bn;
            int avail_pos = 0, avail_neg = 0;
            for (double mu : oracle.values) {
                if (mu > tol) ++avail_pos;
                if (mu < -tol) ++avail_neg;
            }
            if (avail_pos == 0 || avail_neg == 0) continue; // needs both sequences to compare

            TwoSidedSpectrum sp = solve_indefinite_pencil(k, b, avail_pos, avail_neg);
            for (int idx = 0; idx < avail_pos; ++idx) {
                double lam = sp.positive.lambda[static_cast<std::size_t>(idx)];
                double mu_o = oracle.values[static_cast<std::size_t>(n - 1 - idx)];
                double lam_o = 1.0 / mu_o;
                if (std::abs(lam_o) >= 1e6) continue;
                require(std::abs(lam - lam_o) <= 1e-10 * std::abs(lam_o),
                        "instance " + std::to_string(inst) + ": lambda+ " + fmt(lam) + " vs oracle " +
                            fmt(lam_o));
                const Vec& u = sp.positive.vectors[static_cast<std::size_t>(idx)];
                Vec bu = b.apply(u);
                double q = 0.0;
                for (int r = 0; r < n; ++r) q += u[static_cast<std::size_t>(r)] * bu[static_cast<std::size_t>(r)];
                require(q > 0.0, "sign(u^T B u) != sign(lambda) on the positive side");
            }
            for (int idx = 0; idx < avail_neg; ++idx) {
                double lam = sp.negative.lambda[static_cast<std::size_t>(idx)];
                double mu_o = oracle.values[static_cast<std::size_t>(idx)];
                double lam_o = 1.0 / mu_o;
                if (std::abs(lam_o) >= 1e6) continue;
                require(std::abs(lam - lam_o) <= 1e-10 * std::abs(lam_o),
                        "instance " + std::to_string(inst) + ": lambda- " + fmt(lam) + " vs oracle " +
                            fmt(lam_o));
                const Vec& u = sp.negative.vectors[static_cast<std::size_t>(idx)];
                Vec bu = b.apply(u);
                double q = 0.0;
                for (int r = 0; r < n; ++r) q += u[static_cast<std::size_t>(r)] * bu[static_cast<std::size_t>(r)];
                require(q < 0.0, "sign(u^T B u) != sign(lambda) on the negative side");
            }
        }
    }});

    criteria.push_back({4, "two-sequence existence for every regime and eps", [&] {
        for (const std::string& dc : {"positive_avg", "zero_avg", "negative_avg"}) {
            for (int n : {1, 2}) {
                auto mesh = std::make_shared<DomainMesh>(
                    build_domain_mesh(n, 8, CellGeometry::square_hole(8)));
                CoefficientField cf = preset_coefficients("identity", *mesh);
                DensityField rho = preset_density(dc, *mesh);
                EpsSolution sol = solve_eps_spectrum(mesh, cf, rho, 1, 1);
                require(sol.spectrum.positive.count() == 1 && sol.spectrum.negative.count() == 1,
                        dc + " n=" + std::to_string(n) + ": missing a sequence");
                require(sol.spectrum.positive.lambda[0] > 0.0 && sol.spectrum.negative.lambda[0] < 0.0,
                        dc + " n=" + std::to_string(n) + ": sequence signs wrong");
            }
        }
    }});

    criteria.push_back({5, "theta_1^- facts and xi-spectrum scale invariance", [&] {
        CellMesh cm = build_cell_mesh(CellGeometry::square_hole(8));
        CoefficientField cf = preset_coefficients("identity", cm);
        DensityField rho = preset_density("positive_avg", cm);
        LocalSpectrum ls = local_spectrum(cm, cf, rho);
        require(ls.lambda1neg < 0.0, "lambda_1^- = " + fmt(ls.lambda1neg) + " not negative");
        DofMap dm = build_periodic_dofmap(cm, false);
        double tmin = 1e300;
        for (double v : ls.theta) tmin = std::min(tmin, v);
        require(tmin > 0.0, "theta_1^- min dof value " + fmt(tmin) + " not positive");
        require(ls.int_rho_theta2 < 0.0, "int rho theta^2 = " + fmt(ls.int_rho_theta2));

        Vec theta2 = ls.theta;
        for (double& v : theta2) v *= 2.0;
        WeightedCellData w1 = weighted_cell_data(cm, cf, rho, ls.theta);
        WeightedCellData w2 = weighted_cell_data(cm, cf, rho, theta2);
        auto cellmesh = std::make_shared<CellMesh>(cm);
        auto mesh = std::make_shared<DomainMesh>(build_domain_mesh(2, 8, CellGeometry::square_hole(8)));
        auto solve_xi = [&](const WeightedCellData& w) {
            CoefficientField at = transfer_to_domain(w.a_tilde, *mesh);
            DensityField rt = transfer_to_domain(w.rho_tilde, *mesh);
            EpsSolution s = solve_eps_spectrum(mesh, at, rt, 1, 2);
            return s.spectrum.negative.lambda;
        };
        Vec x1 = solve_xi(w1), x2 = solve_xi(w2);
        for (std::size_t i = 0; i < x1.size(); ++i) {
            require(std::abs(x1[i] - x2[i]) <= 1e-10 * std::abs(x1[i]),
                    "xi spectrum moved under theta -> 2 theta: " + fmt(x1[i]) + " vs " + fmt(x2[i]));
        }
    }});

    criteria.push_back({6, "M>0 positive side: |lambda+ - lambda0| strictly decreasing, final rel <= 0.1", [&] {
        const ConvergenceReport& rep = mpos_report();
        double prev = 1e300;
        for (int n : {2, 4, 8}) {
            const SweepRow& r = find_row(rep, n, 1, '+');
            require(r.abs_err < prev, "error not strictly decreasing at n=" + std::to_string(n) +
                                          ": " + fmt(r.abs_err) + " vs " + fmt(prev));
            prev = r.abs_err;
        }
        const SweepRow& last = find_row(rep, 8, 1, '+');
        require(last.rel_err <= 0.1, "final relative error " + fmt(last.rel_err) + " > 0.1");
    }});

    criteria.push_back({7, "M>0 negative side: shifted error and factorization residual decreasing", [&] {
        const ConvergenceReport& rep = mpos_report();
        double prev_err = 1e300, prev_res = 1e300;
        for (int n : {2, 4, 8}) {
            const SweepRow& r = find_row(rep, n, 1, '-');
            require(r.abs_err < prev_err, "shifted error not strictly decreasing at n=" +
                                              std::to_string(n) + ": " + fmt(r.abs_err));
            require(r.factor_resid && *r.factor_resid < prev_res,
                    "factorization residual not decreasing at n=" + std::to_string(n));
            prev_err = r.abs_err;
            prev_res = *r.factor_resid;
        }
    }});

    criteria.push_back({8, "M=0: scaled eigenvalue errors decrease, branch symmetry, (2.291) norm", [&] {
        const ConvergenceReport& rep = mzero_report();
        for (char side : {'+', '-'}) {
            double prev = 1e300;
            for (int n : {2, 4, 8}) {
                const SweepRow& r = find_row(rep, n, 1, side);
                require(r.abs_err < prev, std::string("side ") + side +
                                              " error not decreasing at n=" + std::to_string(n));
                prev = r.abs_err;
            }
        }
        double prev_sum = 1e300;
        for (int n : {2, 4, 8}) {
            double s = std::abs(find_row(rep, n, 1, '+').lambda_transformed +
                                find_row(rep, n, 1, '-').lambda_transformed);
            require(s < prev_sum || s <= 1e-9,
                    "|eps lambda+ + eps lambda-| not decreasing toward 0 at n=" + std::to_string(n) +
                        ": " + fmt(s));
            prev_sum = std::max(s, 1e-9);
        }
        // normalization (2.291) at grid 64
        HomogenizedModel model = build_homogenized_model(CellGeometry::square_hole(8), "identity",
                                                         "zero_avg");
        LimitSolution lp = limit_pencil(model.q, *model.nu2, 2, 64);
        SymmetricOperator mass = assemble_plain_mass(*lp.mesh, lp.dofmap);
        for (int k = 1; k <= 2; ++k) {
            double n2 = mass.quadratic_form(lp.eigenfunctions[static_cast<std::size_t>(k - 1)]);
            double target = 1.0 / (std::sqrt(lp.mu[static_cast<std::size_t>(k - 1)]) * lp.nu);
            require(std::abs(n2 - target) <= 1e-6 * target,
                    "(2.291) violated at k=" + std::to_string(k) + ": " + fmt(n2) + " vs " +
                        fmt(target));
        }
    }});

    criteria.push_back({9, "corrector energy decay (M_pos and M_zero)", [&] {
        for (const ConvergenceReport* rep : {&mpos_report(), &mzero_report()}) {
            double prev = 1e300;
            for (int n : {2, 4, 8}) {
                const SweepRow& r = find_row(*rep, n, 1, '+');
                require(r.corrector_e && *r.corrector_e < prev,
                        r.regime + ": corrector energy not strictly decreasing at n=" +
                            std::to_string(n));
                prev = *r.corrector_e;
            }
            const SweepRow& last = find_row(*rep, 8, 1, '+');
            require(last.corrector_e_plain && *last.corrector_e < *last.corrector_e_plain,
                    regime_name(rep->plan.regime) +
                        ": corrector did not beat the plain comparison at n=8");
        }
    }});

    criteria.push_back({10, "scaled two-scale pairing error decreasing (M=0, psi1 = rho chi_G)", [&] {
        const ConvergenceReport& rep = mzero_report();
        double prev = 1e300;
        for (int n : {2, 4, 8}) {
            const SweepRow& r = find_row(rep, n, 1, '+');
            require(r.pairing_err && *r.pairing_err < prev,
                    "pairing error not decreasing at n=" + std::to_string(n));
            prev = *r.pairing_err;
        }
    }});

    criteria.push_back({11, "normalization identities (3.131), (3.412), (3.22) and limit Grams", [&] {
        // the eps solver enforces its tagged normalization internally by
        // quadrature; exercise all three tags explicitly here
        HomogenizedModel model = build_homogenized_model(CellGeometry::square_hole(8), "identity",
                                                         "positive_avg");
        for (int n : {2, 4}) {
            auto mesh = std::make_shared<DomainMesh>(
                build_domain_mesh(n, 8, CellGeometry::square_hole(8)));
            CoefficientField cf = transfer_to_domain(model.coeff, *mesh);
            DensityField rho = transfer_to_domain(model.density, *mesh);
            EpsSolution sol = solve_eps_spectrum(mesh, cf, rho, 2, 2, NormalizationTag::BSigned);
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    double expect = (i == j) ? 1.0 : 0.0;
                    require(std::abs(sol.gram_pos(i, j) - expect) <= 1e-8, "(3.131) violated");
                    require(std::abs(sol.gram_neg(i, j) + expect) <= 1e-8, "(3.412)-type violated");
                }
            }
            CoefficientField at = transfer_to_domain(*model.a_tilde, *mesh);
            DensityField rt = transfer_to_domain(*model.rho_tilde, *mesh);
            EpsSolution solw = solve_eps_spectrum(mesh, at, rt, 1, 2, NormalizationTag::BSigned);
            require(std::abs(solw.gram_neg(0, 0) + 1.0) <= 1e-8, "(3.412) violated");

            HomogenizedModel mz = build_homogenized_model(CellGeometry::square_hole(8), "identity",
                                                          "zero_avg");
            DensityField rz = transfer_to_domain(mz.density, *mesh);
            EpsSolution solz = solve_eps_spectrum(mesh, cf, rz, 2, 2, NormalizationTag::BScaledEps);
            double eps = 1.0 / n;
            for (int i = 0; i < 2; ++i) {
                require(std::abs(solz.gram_pos(i, i) - eps) <= 1e-8 * eps, "(3.22)+ violated");
                require(std::abs(solz.gram_neg(i, i) + eps) <= 1e-8 * eps, "(3.22)- violated");
            }
        }
        // limit orthonormality: int u0^k u0^l = delta_kl / M
        LimitSolution lpos = limit_positive(model.q, model.M, 3, 64);
        SymmetricOperator mass = assemble_plain_mass(*lpos.mesh, lpos.dofmap);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double g = mass.bilinear_form(lpos.eigenfunctions[static_cast<std::size_t>(i)],
                                              lpos.eigenfunctions[static_cast<std::size_t>(j)]);
                double expect = (i == j) ? 1.0 / model.M : 0.0;
                require(std::abs(g - expect) <= 1e-6 * (1.0 / model.M),
                        "limit orthonormality violated at (" + std::to_string(i) + "," +
                            std::to_string(j) + "): " + fmt(g));
            }
        }
        // (eq4)-derived Gram formula for the pencil limit
        HomogenizedModel mz = build_homogenized_model(CellGeometry::square_hole(8), "identity",
                                                      "zero_avg");
        LimitSolution lpen = limit_pencil(mz.q, *mz.nu2, 3, 64);
        OrthonormalityReport rep = limit_orthonormality_check(lpen);
        require(rep.max_abs_deviation <= 1e-6,
                "pencil Gram deviates from the closed form by " + fmt(rep.max_abs_deviation));
    }});

    criteria.push_back({12, "M<0 sweep equals M>0 sweep with sequences swapped (1e-12)", [&] {
        const ConvergenceReport& pos = mpos_report();
        SweepPlan p;
        p.regime = Regime::MNeg;
        p.density_case = "negative_avg";
        p.n_list = {2, 4, 8};
        ConvergenceReport neg = run_sweep(p);
        require(neg.rows.size() == pos.rows.size(), "row count mismatch");
        for (const SweepRow& rp : pos.rows) {
            char mirrored = (rp.side == '+') ? '-' : '+';
            const SweepRow& rn = find_row(neg, rp.n, rp.k, mirrored);
            require(std::abs(rn.lambda_raw + rp.lambda_raw) <= 1e-12,
                    "lambda_raw mirror broken at n=" + std::to_string(rp.n));
            require(std::abs(rn.lambda_transformed + rp.lambda_transformed) <= 1e-12,
                    "lambda_transformed mirror broken at n=" + std::to_string(rp.n));
            require(std::abs(rn.limit + rp.limit) <= 1e-12, "limit mirror broken");
            require(std::abs(rn.abs_err - rp.abs_err) <= 1e-12, "abs_err mirror broken");
        }
    }});

    criteria.push_back({13, "determinism: repeated sweep runs emit byte-identical CSV/JSON", [&] {
        SweepPlan p;
        p.regime = Regime::MPos;
        p.density_case = "positive_avg";
        p.n_list = {1, 2};
        p.limit_grid = 16;
        p.count_pos = 1;
        p.count_neg = 1;
        ConvergenceReport a = run_sweep(p);
        ConvergenceReport b = run_sweep(p);
        require(a.to_csv() == b.to_csv(), "CSV outputs differ between runs");
        require(a.to_json() == b.to_json(), "JSON outputs differ between runs");
    }});

    int failures = 0;
    for (const Criterion& c : criteria) {
        try {
            c.body();
            os << "[PASS] criterion " << c.id << ": " << c.name << "\n";
        } catch (const std::exception& e) {
            ++failures;
            os << "[FAIL] criterion " << c.id << ": " << c.name << " -- " << e.what() << "\n";
        }
        os.flush();
    }
    os << (failures == 0 ? "all criteria passed\n"
                         : std::to_string(failures) + " criteria failed\n");
    return failures;
}

} // namespace perfhom
