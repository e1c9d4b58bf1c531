#pragma once

#include "perfhom/cell.hpp"
#include "perfhom/finescale.hpp"
#include "perfhom/limits.hpp"

#include <optional>
#include <string>
#include <vector>

namespace perfhom {

/// One epsilon-sweep: which regime, which refinements, which diagnostics.
struct SweepPlan {
    Regime regime = Regime::MPos;
    std::vector<int> n_list{2, 4, 8}; // eps = 1/n, strictly increasing n
    int cell_m = 8;
    int s = 8;
    int limit_grid = 64;
    int count_pos = 2;
    int count_neg = 2;
    std::string hole = "square"; // square | polygon | none
    std::string coeff_preset = "identity";
    std::string density_case = "positive_avg";
    bool corrector = true;
    bool factorization = true;
    bool pairing = true;
    int dof_budget = 100000;
    unsigned seed = 1;          // property-test instance generation downstream
    bool record_timings = false;

    void validate() const;
};

struct SweepRow {
    std::string regime;
    int n = 0;
    double eps = 0.0;
    int k = 0;
    char side = '+';
    double lambda_raw = 0.0;
    double lambda_transformed = 0.0;
    double limit = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
    std::optional<double> corrector_e;        // with first-order corrector
    std::optional<double> corrector_e_plain;  // without corrector
    std::optional<double> factor_resid;
    std::optional<double> o1_resid;           // |(lambda - lambda_1^-/eps^2) - xi_eps|
    std::optional<double> pairing_value;
    std::optional<double> pairing_limit;
    std::optional<double> pairing_err;
    std::optional<double> extension_ratio;
};

struct ConvergenceReport {
    SweepPlan plan;
    std::vector<SweepRow> rows; // sorted by eps descending, then side, then k
    std::uint64_t model_hash = 0;
    std::string version = "perfhom 1.0";
    Vec limit_values;           // targets used per k (positive side convention)
    std::vector<double> wall_ms; // per n, recorded only when plan.record_timings

    std::string to_json() const;
    std::string to_csv() const;
};

ConvergenceReport run_sweep(const SweepPlan& plan);

/// ||u^{k,-} - theta^eps v^{k,-}|| / ||u^{k,-}|| on Omega^eps (sign-aligned),
/// plus the o(1) gap |(lambda^{k,-} - lambda_1^-/eps^2) - xi_eps^{k,-}|.
struct FactorizationResidual {
    double residual = 0.0;
    double o1 = 0.0;
};
FactorizationResidual factorization_residual(const EpsSolution& sol, const EpsSolution& weighted,
                                             const HomogenizedModel& model, int k);

/// Corrector energy E(eps) = ||D(P u) - D u0 - D_y u1(., ./eps)||_{L2(Omega)}
/// and the no-corrector variant, sign-aligned against u0.
struct CorrectorEnergy {
    double with_corrector = 0.0;
    double without_corrector = 0.0;
    double extension_ratio = 0.0;
};
CorrectorEnergy corrector_energy(const EpsSolution& sol, const FilledDomain& fd,
                                 const CorrectorSampler& sampler, int k, char side);

/// Write {regime}_{quantity}.{csv,json,svg} under out_dir.
std::vector<std::string> emit_report(const ConvergenceReport& report,
                                     const std::vector<std::string>& formats,
                                     const std::string& out_dir);

/// Number of worker threads for per-eps solves: PERFHOM_THREADS, else min(hw, 4).
int worker_threads();

/// Shortest round-trip decimal text for a double (deterministic output).
std::string format_double(double v);

} // namespace perfhom
