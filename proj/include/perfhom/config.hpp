#pragma once

#include "perfhom/harness.hpp"

#include <string>
#include <vector>

namespace perfhom {

/// Validated batch-run configuration; maps 1:1 onto SweepPlan plus output
/// options. Parsed from a key=value document with dotted sections.
struct RunConfig {
    std::string regime = "M_pos";
    std::string hole = "square";
    int m = 8;
    int s = 8;
    std::vector<int> n_list{2, 4, 8};
    std::string coeff = "identity";
    std::string density = "positive_avg";
    int count_pos = 2;
    int count_neg = 2;
    int limit_grid = 64;
    std::string output_dir = "out";
    std::vector<std::string> formats{"csv", "json", "svg"};
    int dof_budget = 100000;
    unsigned seed = 1;
    bool timings = false;

    bool operator==(const RunConfig&) const = default;

    SweepPlan to_plan() const;
    std::string print() const; // canonical document, parse(print(c)) == c
};

/// Parse and validate; throws ValidationError whose message lists every
/// violation found, not just the first.
RunConfig parse_config(const std::string& text);

RunConfig default_config();

} // namespace perfhom
