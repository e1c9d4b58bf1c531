// perfhom: batch driver for the perforated-cell homogenization toolkit.
//
// Subcommands:
//   cell       build the homogenized cell model, write model.json
//   limit      solve the regime's limit spectral problem(s), write limit.json
//   solve-eps  solve the eps-problem for each n in the sweep list
//   sweep      full eps-sweep with convergence diagnostics (CSV/JSON/SVG)
//   check      run the acceptance suite
//
// Exit codes: 0 ok, 2 validation error, 3 solver error, 4 acceptance failure.

#include "perfhom/acceptance.hpp"
#include "perfhom/cell.hpp"
#include "perfhom/config.hpp"
#include "perfhom/errors.hpp"
#include "perfhom/finescale.hpp"
#include "perfhom/harness.hpp"
#include "perfhom/limits.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

namespace fs = std::filesystem;
using namespace perfhom;

RunConfig load_config(const std::string& path, const std::string& out_dir,
                      const std::vector<std::string>& formats, int budget) {
    RunConfig cfg;
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw ValidationError("cannot read config file '" + path + "'");
        std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        cfg = parse_config(text);
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!formats.empty()) cfg.formats = formats;
    if (budget > 0) cfg.dof_budget = budget;
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot write " + path.string());
    os << content;
    std::cout << "wrote " << path.string() << "\n";
}

HomogenizedModel model_for(const RunConfig& cfg) {
    CellGeometry geom = cfg.hole == "square"    ? CellGeometry::square_hole(cfg.m)
                        : cfg.hole == "polygon" ? CellGeometry::polygon_hole(cfg.m)
                                                : CellGeometry::no_hole(cfg.m);
    // the M < 0 pipeline runs on -rho per the sign reduction
    std::string density = cfg.regime == "M_neg" ? "positive_avg" : cfg.density;
    return build_homogenized_model(geom, cfg.coeff, density);
}

int cmd_cell(const RunConfig& cfg) {
    HomogenizedModel model = model_for(cfg);
    write_file(fs::path(cfg.output_dir) / "model.json", model.to_json());
    return 0;
}

int cmd_limit(const RunConfig& cfg) {
    HomogenizedModel model = model_for(cfg);
    nlohmann::json j;
    j["regime"] = cfg.regime;
    j["grid"] = cfg.limit_grid;
    bool mirror = cfg.regime == "M_neg";
    if (cfg.regime == "M_zero") {
        LimitSolution lp = limit_pencil(model.q, *model.nu2, std::max(cfg.count_pos, cfg.count_neg),
                                        cfg.limit_grid);
        j["kind"] = "pencil";
        j["nu2"] = *model.nu2;
        j["mu"] = lp.mu;
        j["lambda_plus"] = lp.eigenvalues;
        Vec neg = lp.eigenvalues;
        for (double& v : neg) v = -v;
        j["lambda_minus"] = neg;
    } else {
        LimitSolution lpos = limit_positive(model.q, model.M, cfg.count_pos, cfg.limit_grid);
        LimitSolution lneg = limit_negative(*model.q_tilde, *model.M_tilde, cfg.count_neg,
                                            cfg.limit_grid);
        Vec lam = lpos.eigenvalues, xi = lneg.eigenvalues;
        if (mirror) {
            for (double& v : lam) v = -v;
            for (double& v : xi) v = -v;
        }
        j["kind"] = mirror ? "negated(M_pos)" : "M_pos";
        j["lambda0"] = lam;
        j["xi0"] = xi;
        j["lambda1neg"] = mirror ? -*model.lambda1neg : *model.lambda1neg;
        j["M"] = mirror ? -model.M : model.M;
        j["M_tilde"] = mirror ? -*model.M_tilde : *model.M_tilde;
    }
    write_file(fs::path(cfg.output_dir) / "limit.json", j.dump(2));
    return 0;
}

int cmd_solve_eps(const RunConfig& cfg) {
    HomogenizedModel model = model_for(cfg);
    bool mirror = cfg.regime == "M_neg";
    for (int n : cfg.n_list) {
        CellGeometry geom = cfg.hole == "square"    ? CellGeometry::square_hole(cfg.s)
                            : cfg.hole == "polygon" ? CellGeometry::polygon_hole(cfg.s)
                                                    : CellGeometry::no_hole(cfg.s);
        auto mesh = std::make_shared<DomainMesh>(build_domain_mesh(n, cfg.s, geom, cfg.dof_budget));
        CoefficientField cf = transfer_to_domain(model.coeff, *mesh);
        DensityField rho = transfer_to_domain(model.density, *mesh);
        NormalizationTag tag = (cfg.regime == "M_zero") ? NormalizationTag::BScaledEps
                                                        : NormalizationTag::BSigned;
        EpsSolution sol = solve_eps_spectrum(mesh, cf, rho, cfg.count_pos, cfg.count_neg, tag);

        nlohmann::json j;
        j["n"] = n;
        j["eps"] = sol.eps();
        Vec lp = sol.spectrum.positive.lambda, ln = sol.spectrum.negative.lambda;
        if (mirror) {
            // mirror the -rho solve back to the requested density
            std::swap(lp, ln);
            for (double& v : lp) v = -v;
            for (double& v : ln) v = -v;
        }
        j["lambda_pos"] = lp;
        j["lambda_neg"] = ln;
        j["normalization"] = (tag == NormalizationTag::BScaledEps) ? "pm_eps" : "pm_one";
        write_file(fs::path(cfg.output_dir) / ("eps_n" + std::to_string(n) + ".json"), j.dump(2));

        std::vector<NamedField> fields;
        for (int k = 0; k < sol.spectrum.positive.count(); ++k) {
            fields.push_back({"u_pos_" + std::to_string(k + 1),
                              vertex_values(*sol.dofmap, sol.spectrum.positive.vectors[k])});
        }
        for (int k = 0; k < sol.spectrum.negative.count(); ++k) {
            fields.push_back({"u_neg_" + std::to_string(k + 1),
                              vertex_values(*sol.dofmap, sol.spectrum.negative.vectors[k])});
        }
        std::ostringstream ms;
        write_mesh_text(ms, *mesh, fields);
        write_file(fs::path(cfg.output_dir) / ("eps_n" + std::to_string(n) + "_fields.txt"), ms.str());
    }
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    SweepPlan plan = cfg.to_plan();
    ConvergenceReport rep = run_sweep(plan);
    for (const std::string& f : emit_report(rep, cfg.formats, cfg.output_dir)) {
        std::cout << "wrote " << f << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"perfhom: spectral homogenization of indefinite-density problems in "
                 "perforated domains"};
    app.require_subcommand(0, 1);

    std::string config_path, out_dir;
    std::vector<std::string> formats;
    int budget = 0;
    bool print_defaults = false;
    app.add_option("-c,--config", config_path, "key=value configuration file");
    app.add_option("-o,--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--formats", formats, "output formats (csv,json,svg)")->delimiter(',');
    app.add_option("--budget", budget, "dof budget override");
    app.add_flag("--print-defaults", print_defaults, "print the default configuration and exit");

    auto* cell = app.add_subcommand("cell", "build the homogenized cell model");
    auto* limit = app.add_subcommand("limit", "solve the limit spectral problem(s)");
    auto* eps = app.add_subcommand("solve-eps", "solve the eps-problem for each n");
    auto* sweep = app.add_subcommand("sweep", "run the full convergence sweep");
    auto* check = app.add_subcommand("check", "run the acceptance suite");

    CLI11_PARSE(app, argc, argv);

    if (print_defaults) {
        std::cout << default_config().print();
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 0;
    }

    try {
        RunConfig cfg = load_config(config_path, out_dir, formats, budget);
        if (cell->parsed()) return cmd_cell(cfg);
        if (limit->parsed()) return cmd_limit(cfg);
        if (eps->parsed()) return cmd_solve_eps(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (check->parsed()) {
            int failures = run_acceptance(std::cout);
            return failures == 0 ? 0 : 4;
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
