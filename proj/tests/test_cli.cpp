#include "doctest.h"

#include "fixtures.hpp"
#include "gluesym/cli.hpp"

#include <cstdlib>

using namespace gluesym::cli;

namespace {

Report run_on(const std::string& cmd, const std::string& fixture, Options o = {}) {
    return run(cmd, fixtures::path(fixture), o);
}

}  // namespace

TEST_CASE("info counts") {
    auto r = run_on("info", "figure_eight.json");
    CHECK(r.exit_code == kPass);
    CHECK(r.results["tetrahedra"] == 2);
    CHECK(r.results["edges"] == 2);
    CHECK(r.results["cusps"] == 1);
    CHECK(r.results["cusp_list"][0]["topology"] == "torus");
    auto single = run_on("info", "single_tet.json");
    CHECK(single.results["cusps"] == 4);
    for (const auto& c : single.results["cusp_list"]) CHECK(c["topology"] == "disc");
}

TEST_CASE("parse failures exit 2") {
    auto r = run_on("info", "malformed.json");
    CHECK(r.exit_code == kParseFailure);
    REQUIRE(r.error);
    CHECK((*r.error)["kind"] == "SchemaError");
    CHECK(run_on("info", "missing_inverse.json").exit_code == kParseFailure);
    CHECK(run("info", "/nonexistent/file.json", {}).exit_code == kParseFailure);
}

TEST_CASE("homology ranks") {
    Options o;
    o.stage = "M";
    auto tet = run_on("homology", "single_tet.json", o);
    CHECK(tet.results["rank"] == 2);
    o.stage = "M0";
    CHECK(run_on("homology", "figure_eight.json", o).results["rank"] == 4);
    o.stage = "Mprime";
    auto fe = run_on("homology", "figure_eight.json", o);
    CHECK(fe.results["rank"] == 2);
    CHECK(fe.results["peripheral_form"][0][1] == 2);
    CHECK(fe.exit_code == kPass);
}

TEST_CASE("verify, solve and nonab on the figure-eight") {
    auto v = run_on("verify", "figure_eight.json");
    CHECK(v.exit_code == kPass);
    CHECK(v.verdicts.size() > 5);
    for (const auto& x : v.verdicts) CHECK_MESSAGE(x.passed, x.identity);

    auto s = run_on("solve", "figure_eight.json");
    CHECK(s.exit_code == kPass);
    CHECK(std::abs(s.results["volume"].get<double>() - 2.029883212819307) < 1e-9);

    Options o;
    o.points = 5;
    auto n = run_on("nonab", "figure_eight.json", o);
    CHECK(n.exit_code == kPass);
    CHECK(n.results["residuals"]["commuting_square"].get<double>() < 1e-10);
    CHECK(n.results["k2_reduced"] == "1/2 x_alpha_0 ^ x_beta_0");
}

TEST_CASE("numeric failure exits 3") {
    Options o;
    o.retries = 1;
    o.max_iter = 1;
    auto r = run_on("solve", "knot_5_2.json", o);
    CHECK(r.exit_code == kNumericFailure);
}

TEST_CASE("reports are deterministic and use 15 digits") {
    Options o;
    o.points = 3;
    auto a = run_on("nonab", "knot_5_2.json", o).to_json().dump();
    auto b = run_on("nonab", "knot_5_2.json", o).to_json().dump();
    CHECK(a == b);
    CHECK(round15(0.1234567890123456789) == 0.123456789012346);
    CHECK(run_on("volume", "figure_eight.json").to_json().dump() == run_on("volume", "figure_eight.json").to_json().dump());
}

TEST_CASE("GLUESYM_SEED overrides the seed flag") {
    Options o;
    o.seed = 1;
    ::setenv("GLUESYM_SEED", "42", 1);
    CHECK(apply_environment(o).seed == 42);
    ::setenv("GLUESYM_SEED", "x", 1);
    CHECK_THROWS(apply_environment(o));
    ::unsetenv("GLUESYM_SEED");
    CHECK(apply_environment(o).seed == 1);
}
