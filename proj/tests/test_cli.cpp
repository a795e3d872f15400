#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "hjm/cli/commands.hpp"
#include "hjm/cli/properties.hpp"
#include "hjm/cli/scenario.hpp"
#include "hjm/core/error.hpp"

using namespace hjm::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hjm_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int exit_status(const std::string& args) {
    const std::string cmd = std::string(HJM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

const std::string configs = HJM_CONFIG_DIR;

}  // namespace

TEST_CASE("fnv1a matches the published test vectors") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("scenario files merge over defaults and keep explicit nulls") {
    const json c = load_config(configs + "/holee_call.json");
    CHECK(c.at("mc").at("paths") == 20000);
    CHECK(c.at("mc").at("inner_antithetic") == true);
    CHECK(c.at("hedge").at("expect_support").is_null());
    CHECK(c.at("grid").at("intervals") == 30);
}

TEST_CASE("overrides change the hash and reject unknown keys") {
    json c = default_config();
    const auto h0 = scenario_hash(c);
    apply_override(c, "mc.paths=77");
    CHECK(c.at("mc").at("paths") == 77);
    CHECK(scenario_hash(c) != h0);
    apply_override(c, "payout.strike=atm");
    CHECK(c.at("payout").at("strike") == "atm");
    CHECK_THROWS_AS(apply_override(c, "mc.pathz=1"), hjm::ConfigError);
    CHECK_THROWS_AS(apply_override(c, "mc.paths"), hjm::ConfigError);
}

TEST_CASE("malformed scenarios are configuration errors") {
    json c = default_config();
    c["units"]["time"] = "days";
    CHECK_THROWS_AS(build_scenario(c), hjm::ConfigError);
    c = default_config();
    c["model"]["kind"] = "sabr";
    CHECK_THROWS_AS(build_scenario(c), hjm::ConfigError);
    c = default_config();
    c["mc"]["paths"] = "many";
    CHECK_THROWS_AS(build_scenario(c), hjm::ConfigError);
}

TEST_CASE("mc.dt fixes the step count from the horizon") {
    json c = default_config();
    c["mc"]["dt"] = 0.05;
    const auto s = build_scenario(c);
    CHECK(s.hedge.sim.time.steps() == 100);
}

TEST_CASE("weight constants for a=2, q=5") {
    const auto k = sobolev_constants(2.0, 5.0);
    CHECK(k.pass);
    CHECK(k.detail.at("computed").at("c_v").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(k.detail.at("computed").at("c_w").get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(k.detail.at("computed").at("c_vw").get<double>() == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("hedge runs are bit-identical") {
    json c = load_config(configs + "/holee_call.json");
    c["seed"] = 42;
    const auto s = build_scenario(c);
    RunOptions o;
    o.out_root = scratch("determinism").string();
    const auto a = run("hedge", s, o);
    const std::string first = slurp(fs::path(a.directory) / "report.json");
    const std::string first_csv = slurp(fs::path(a.directory) / "hedge_weights.csv");
    const auto b = run("hedge", s, o);
    CHECK(a.directory == b.directory);
    CHECK(a.exit_code == exit_ok);
    CHECK(!first.empty());
    CHECK(slurp(fs::path(b.directory) / "report.json") == first);
    CHECK(slurp(fs::path(b.directory) / "hedge_weights.csv") == first_csv);
    CHECK(first_csv.rfind("t,maturity,weight,stderr\n", 0) == 0);
    CHECK(a.report.at("scenario_hash") == s.hash);
}

TEST_CASE("subcommands write to separate directories") {
    const auto s = build_scenario(default_config());
    RunOptions o;
    o.out_root = scratch("dirs").string();
    const auto p = run("price", s, o);
    const auto v = run("simulate", s, o);
    CHECK(p.directory != v.directory);
    CHECK(fs::exists(fs::path(p.directory) / "report.json"));
    CHECK(fs::exists(fs::path(v.directory) / "report.json"));
}

TEST_CASE("price on a frozen model is the discounted intrinsic value") {
    json c = default_config();
    c["model"]["taus"] = json::array({{{"kind", "constant"}, {"level", 0.0}}});
    c["mc"]["paths"] = 64;
    const auto s = build_scenario(c);
    RunOptions o;
    o.out_root = scratch("frozen").string();
    const auto r = run("price", s, o);
    CHECK(r.exit_code == exit_ok);
}

TEST_CASE("exit codes from the executable") {
    const std::string out = " --out " + scratch("exit").string();
    CHECK(exit_status("price" + out) == 0);
    CHECK(exit_status("price --override mc.bogus=1" + out) == 2);
    CHECK(exit_status("price --override units.time=days" + out) == 2);
    CHECK(exit_status("frobnicate" + out) == 2);
    CHECK(exit_status("replicate --override mc.budget_cap=10 --override mc.analytic=false" + out) == 4);
    CHECK(exit_status("hedge --override payout.expiry=0.5 --override mc.horizon=0.25" + out) == 3);
}

TEST_CASE("replicate reports do not depend on the worker count") {
    json c = default_config();
    c["grid"]["s_max"] = 12.0;
    c["grid"]["intervals"] = 12;
    c["model"]["kind"] = "local_hjm";
    c["model"]["factors"] = 4;
    c["mc"]["paths"] = 8;
    c["mc"]["steps"] = 8;
    c["mc"]["inner_paths"] = 64;
    const auto s = build_scenario(c);
    RunOptions o;
    o.out_root = scratch("threads").string();
    const auto a = run("replicate", s, o);
    const std::string one = slurp(fs::path(a.directory) / "report.json");
    const std::string one_csv = slurp(fs::path(a.directory) / "hedge_weights.csv");
    o.threads = 3;
    const auto b = run("replicate", s, o);
    CHECK(slurp(fs::path(b.directory) / "report.json") == one);
    CHECK(slurp(fs::path(b.directory) / "hedge_weights.csv") == one_csv);
}
