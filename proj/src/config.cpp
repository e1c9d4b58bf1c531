#include "perfhom/config.hpp"

#include "perfhom/errors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace perfhom {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

const std::set<std::string> known_keys = {
    "regime",          "geometry.hole",   "geometry.m",     "geometry.s",
    "sweep.n",         "materials.coeff", "materials.density",
    "counts.pos",      "counts.neg",      "limit.grid",     "output.dir",
    "output.formats",  "output.timings",  "budget.dofs",    "seed",
};

int parse_int(const std::string& key, const std::string& v, std::vector<std::string>& errors) {
    try {
        std::size_t used = 0;
        int x = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        errors.push_back(key + ": '" + v + "' is not an integer");
        return 0;
    }
}

} // namespace

SweepPlan RunConfig::to_plan() const {
    SweepPlan p;
    p.regime = regime_from_name(regime);
    p.n_list = n_list;
    p.cell_m = m;
    p.s = s;
    p.limit_grid = limit_grid;
    p.count_pos = count_pos;
    p.count_neg = count_neg;
    p.hole = hole;
    p.coeff_preset = coeff;
    p.density_case = density;
    p.dof_budget = dof_budget;
    p.seed = seed;
    p.record_timings = timings;
    return p;
}

std::string RunConfig::print() const {
    std::ostringstream os;
    os << "regime = " << regime << "\n";
    os << "geometry.hole = " << hole << "\n";
    os << "geometry.m = " << m << "\n";
    os << "geometry.s = " << s << "\n";
    os << "sweep.n = ";
    for (std::size_t i = 0; i < n_list.size(); ++i) os << (i ? "," : "") << n_list[i];
    os << "\n";
    os << "materials.coeff = " << coeff << "\n";
    os << "materials.density = " << density << "\n";
    os << "counts.pos = " << count_pos << "\n";
    os << "counts.neg = " << count_neg << "\n";
    os << "limit.grid = " << limit_grid << "\n";
    os << "output.dir = " << output_dir << "\n";
    os << "output.formats = ";
    for (std::size_t i = 0; i < formats.size(); ++i) os << (i ? "," : "") << formats[i];
    os << "\n";
    os << "output.timings = " << (timings ? "true" : "false") << "\n";
    os << "budget.dofs = " << dof_budget << "\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::vector<std::string> errors;
    std::map<std::string, std::string> seen;

    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (!known_keys.count(key)) {
            errors.push_back("unknown key '" + key + "'");
            continue;
        }
        if (seen.count(key)) {
            errors.push_back("duplicate key '" + key + "'");
            continue;
        }
        seen[key] = value;
    }

    for (const auto& [key, value] : seen) {
        if (key == "regime") cfg.regime = value;
        else if (key == "geometry.hole") cfg.hole = value;
        else if (key == "geometry.m") cfg.m = parse_int(key, value, errors);
        else if (key == "geometry.s") cfg.s = parse_int(key, value, errors);
        else if (key == "sweep.n") {
            cfg.n_list.clear();
            for (const std::string& item : split(value, ','))
                cfg.n_list.push_back(parse_int(key, item, errors));
        } else if (key == "materials.coeff") cfg.coeff = value;
        else if (key == "materials.density") cfg.density = value;
        else if (key == "counts.pos") cfg.count_pos = parse_int(key, value, errors);
        else if (key == "counts.neg") cfg.count_neg = parse_int(key, value, errors);
        else if (key == "limit.grid") cfg.limit_grid = parse_int(key, value, errors);
        else if (key == "output.dir") cfg.output_dir = value;
        else if (key == "output.formats") {
            cfg.formats = split(value, ',');
        } else if (key == "output.timings") {
            if (value == "true") cfg.timings = true;
            else if (value == "false") cfg.timings = false;
            else errors.push_back("output.timings: expected true or false");
        } else if (key == "budget.dofs") cfg.dof_budget = parse_int(key, value, errors);
        else if (key == "seed") cfg.seed = static_cast<unsigned>(parse_int(key, value, errors));
    }

    // semantic validation; collect everything before reporting
    if (cfg.regime != "M_pos" && cfg.regime != "M_zero" && cfg.regime != "M_neg") {
        errors.push_back("regime: must be M_pos, M_zero or M_neg");
    }
    if (cfg.hole != "square" && cfg.hole != "polygon" && cfg.hole != "none") {
        errors.push_back("geometry.hole: must be square, polygon or none");
    }
    if (cfg.hole != "none") {
        if (cfg.m < 8 || cfg.m % 8 != 0) errors.push_back("geometry.m: must be a positive multiple of 8");
        if (cfg.s < 8 || cfg.s % 8 != 0) errors.push_back("geometry.s: must be a positive multiple of 8");
    } else {
        if (cfg.m < 8) errors.push_back("geometry.m: must be at least 8");
        if (cfg.s < 8) errors.push_back("geometry.s: must be at least 8");
    }
    if (cfg.m != cfg.s) errors.push_back("geometry.m and geometry.s must agree (exact cell/domain alignment)");
    if (cfg.n_list.empty()) errors.push_back("sweep.n: needs at least one value");
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        if (cfg.n_list[i] < 1) errors.push_back("sweep.n: values must be positive");
        if (i > 0 && cfg.n_list[i] <= cfg.n_list[i - 1]) {
            errors.push_back("sweep.n: must be strictly increasing (eps strictly decreasing)");
            break;
        }
    }
    if (cfg.coeff != "identity" && cfg.coeff != "layered") {
        errors.push_back("materials.coeff: must be identity or layered");
    }
    const std::map<std::string, std::string> regime_density = {
        {"M_pos", "positive_avg"}, {"M_zero", "zero_avg"}, {"M_neg", "negative_avg"}};
    auto rd = regime_density.find(cfg.regime);
    if (rd != regime_density.end() && cfg.density != rd->second) {
        errors.push_back("materials.density: regime " + cfg.regime + " requires density " +
                         rd->second + ", got " + cfg.density);
    }
    if (cfg.count_pos < 1) errors.push_back("counts.pos: must be positive");
    if (cfg.count_neg < 1) errors.push_back("counts.neg: must be positive");
    if (cfg.limit_grid < 8) errors.push_back("limit.grid: must be at least 8");
    if (cfg.dof_budget < 100) errors.push_back("budget.dofs: unreasonably small");
    if (!cfg.n_list.empty() && cfg.s >= 8) {
        long long nmax = static_cast<long long>(cfg.n_list.back()) * cfg.s + 1;
        if (nmax * nmax > cfg.dof_budget) {
            errors.push_back("sweep.n: finest mesh needs " + std::to_string(nmax * nmax) +
                             " grid vertices, budget.dofs is " + std::to_string(cfg.dof_budget));
        }
    }
    for (const std::string& f : cfg.formats) {
        if (f != "csv" && f != "json" && f != "svg") {
            errors.push_back("output.formats: unknown format '" + f + "'");
        }
    }

    if (!errors.empty()) {
        std::string msg = "configuration invalid:";
        for (const std::string& e : errors) msg += "\n  - " + e;
        throw ValidationError(msg);
    }
    return cfg;
}

} // namespace perfhom
