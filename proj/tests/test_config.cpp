#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "perfhom/config.hpp"
#include "perfhom/errors.hpp"

#include <string>

using namespace perfhom;

TEST_CASE("defaults parse and round-trip") {
    RunConfig def = default_config();
    RunConfig parsed = parse_config(def.print());
    CHECK(parsed == def);
}

TEST_CASE("minimal config with defaults elsewhere") {
    RunConfig cfg = parse_config("regime = M_pos\n");
    CHECK(cfg.regime == "M_pos");
    CHECK(cfg.m == 8);
    CHECK(cfg.n_list == std::vector<int>{2, 4, 8});
    SweepPlan plan = cfg.to_plan();
    plan.validate();
}

TEST_CASE("comments and blank lines are ignored") {
    RunConfig cfg = parse_config("# a comment\n\nregime = M_zero\nmaterials.density = zero_avg\n");
    CHECK(cfg.regime == "M_zero");
}

TEST_CASE("regime/density mismatch is a validation error") {
    CHECK_THROWS_AS(parse_config("regime = M_pos\nmaterials.density = zero_avg\n"),
                    ValidationError);
}

TEST_CASE("duplicate keys are rejected by name") {
    try {
        parse_config("seed = 1\nseed = 2\n");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("duplicate key 'seed'") != std::string::npos);
    }
}

TEST_CASE("unknown keys are rejected by name") {
    try {
        parse_config("geometry.holes = square\n");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("unknown key 'geometry.holes'") != std::string::npos);
    }
}

TEST_CASE("all violations are listed, not just the first") {
    try {
        parse_config("regime = M_what\ngeometry.m = 12\nsweep.n = 4,2\ncounts.pos = 0\n");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("regime") != std::string::npos);
        CHECK(msg.find("geometry.m") != std::string::npos);
        CHECK(msg.find("sweep.n") != std::string::npos);
        CHECK(msg.find("counts.pos") != std::string::npos);
    }
}

TEST_CASE("non-decreasing eps list is rejected") {
    CHECK_THROWS_AS(parse_config("sweep.n = 2,2\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("sweep.n = 8,4,2\n"), ValidationError);
}

TEST_CASE("misaligned m and s are rejected") {
    CHECK_THROWS_AS(parse_config("geometry.m = 16\n"), ValidationError);
    RunConfig ok = parse_config("geometry.m = 16\ngeometry.s = 16\n");
    CHECK(ok.s == 16);
}

TEST_CASE("budget interacts with the sweep list") {
    CHECK_THROWS_AS(parse_config("sweep.n = 2,4,8,16,32,64\n"), ValidationError);
    RunConfig ok = parse_config("sweep.n = 2,4,8,16,32\nbudget.dofs = 100000\n");
    CHECK(ok.n_list.size() == 5);
}

TEST_CASE("format list parses and validates") {
    RunConfig cfg = parse_config("output.formats = csv,json\n");
    CHECK(cfg.formats == std::vector<std::string>{"csv", "json"});
    CHECK_THROWS_AS(parse_config("output.formats = csv,html\n"), ValidationError);
}
