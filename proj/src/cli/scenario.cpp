#include "hjm/cli/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hjm/core/error.hpp"
#include "hjm/curvespace/curves.hpp"
#include "hjm/dynamics/simulate.hpp"

namespace hjm::cli {

namespace {

const char* const kDefaults = R"({
  "units": {"time": "years", "rate": "per year"},
  "seed": 42,
  "grid": {"s_max": 30.0, "intervals": 30, "nodes": null, "v_power": 2.0, "w_power": 5.0, "ghost_tail": 10.0},
  "curve": {"flat_rate": 0.05},
  "model": {
    "kind": "gaussian_hjm",
    "taus": [{"kind": "constant", "level": 0.01}],
    "factors": 10,
    "lambda1": 0.05,
    "decay_power": 1.0,
    "kappa": {"kappa0": 1.0, "beta": 0.5, "center": 0.05, "width": 0.02}
  },
  "payout": {"kind": "zcb_call", "expiry": 5.0, "maturity": 7.0, "strike": "atm", "arrears": 0.0},
  "hedge": {"method": "prehedge", "maturities": [], "expect_support": null},
  "mc": {
    "paths": 1000,
    "steps": 100,
    "dt": null,
    "horizon": null,
    "scheme": null,
    "antithetic": false,
    "inner_paths": 512,
    "inner_antithetic": true,
    "rebalance_every": 1,
    "refine": 0,
    "price_paths": 16384,
    "analytic": true,
    "budget_cap": 2e11,
    "record_paths": 1,
    "bump_eps": 1e-4
  },
  "output": {"paths_csv": false, "paths_recorded": 4}
})";

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

// every key of `given` must exist in `known`; arrays and null defaults are opaque
void check_keys(const json& given, const json& known, const std::string& where) {
    if (!given.is_object() || !known.is_object()) return;
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string path = where.empty() ? it.key() : where + "." + it.key();
        if (!known.contains(it.key())) fail("unknown configuration key '" + path + "'");
        check_keys(it.value(), known.at(it.key()), path);
    }
}

// like merge_patch, but an explicit null is kept as a value
void overlay(json& base, const json& patch) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (it.value().is_object() && base.contains(it.key()) && base.at(it.key()).is_object())
            overlay(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

template <class T>
T get(const json& node, const char* key, const std::string& where) {
    if (!node.contains(key) || node.at(key).is_null()) fail("missing '" + where + "." + key + "'");
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        fail("'" + where + "." + key + "' has the wrong type");
    }
}

double number(const json& node, const char* key, const std::string& where) {
    const json& v = node.contains(key) ? node.at(key) : json();
    if (!v.is_number()) fail("'" + where + "." + key + "' must be a number");
    return v.get<double>();
}

std::size_t count(const json& node, const char* key, const std::string& where) {
    const json& v = node.contains(key) ? node.at(key) : json();
    if (!v.is_number_integer() && !v.is_number_unsigned()) fail("'" + where + "." + key + "' must be an integer");
    if (v.get<long long>() < 0) fail("'" + where + "." + key + "' must be non-negative");
    return v.get<std::size_t>();
}

dynamics::TauSpec tau_spec(const json& t) {
    const auto kind = get<std::string>(t, "kind", "model.taus[]");
    if (kind == "constant") return dynamics::TauSpec::constant(number(t, "level", "model.taus[]"));
    if (kind == "exponential")
        return dynamics::TauSpec::exponential(number(t, "level", "model.taus[]"), number(t, "decay", "model.taus[]"));
    if (kind == "piecewise")
        return dynamics::TauSpec::piecewise(get<std::vector<double>>(t, "breaks", "model.taus[]"),
                                            get<std::vector<double>>(t, "values", "model.taus[]"));
    fail("unknown tau kind '" + kind + "'");
}

curvespace::GridPtr make_grid(const json& g) {
    const auto v = curvespace::power_weight(number(g, "v_power", "grid"));
    const auto w = curvespace::power_weight(number(g, "w_power", "grid"));
    const double tail = number(g, "ghost_tail", "grid");
    if (g.contains("nodes") && !g.at("nodes").is_null())
        return curvespace::make_grid(curvespace::MaturityGrid(get<std::vector<double>>(g, "nodes", "grid"), v, w, tail));
    return curvespace::make_grid(
        curvespace::MaturityGrid::uniform(number(g, "s_max", "grid"), count(g, "intervals", "grid"), v, w, tail));
}

dynamics::ModelPtr make_model(const json& m, const curvespace::GridPtr& grid) {
    const auto kind = get<std::string>(m, "kind", "model");
    if (kind == "gaussian_hjm") {
        const json& taus = m.at("taus");
        if (!taus.is_array() || taus.empty()) fail("'model.taus' must be a non-empty array");
        std::vector<dynamics::TauSpec> specs;
        for (const auto& t : taus) specs.push_back(tau_spec(t));
        return std::make_shared<dynamics::GaussianHjm>(grid, std::move(specs));
    }
    if (kind == "local_hjm") {
        const json& k = m.at("kappa");
        dynamics::Kappa kappa{number(k, "kappa0", "model.kappa"), number(k, "beta", "model.kappa"),
                              number(k, "center", "model.kappa"), number(k, "width", "model.kappa")};
        auto loads = dynamics::FactorLoadings::cosine(*grid, count(m, "factors", "model"), number(m, "lambda1", "model"),
                                                      number(m, "decay_power", "model"));
        return std::make_shared<dynamics::LocalHjm>(grid, kappa, std::move(loads));
    }
    if (kind == "zero") return std::make_shared<dynamics::ZeroVolatility>(grid, count(m, "factors", "model"));
    fail("unknown model kind '" + kind + "'");
}

}  // namespace

const json& default_config() {
    static const json defaults = json::parse(kDefaults);
    return defaults;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open scenario file '" + path + "'");
    json given;
    try {
        given = json::parse(in);
    } catch (const json::parse_error& e) {
        fail("cannot parse '" + path + "': " + e.what());
    }
    if (!given.is_object()) fail("scenario '" + path + "' must be a JSON object");
    check_keys(given, default_config(), "");
    json config = default_config();
    overlay(config, given);
    return config;
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) fail("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    std::string pointer;
    std::stringstream parts(key);
    for (std::string part; std::getline(parts, part, '.');) {
        if (part.empty()) fail("override key '" + key + "' has an empty component");
        pointer += "/" + part;
    }
    const json::json_pointer ptr(pointer);
    if (!default_config().contains(ptr)) fail("unknown override key '" + key + "'");
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    config[ptr] = value;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string scenario_hash(const json& config) { return fnv1a_hex(config.dump()); }

namespace {

Scenario build(const json& config) {
    Scenario s;
    s.config = config;
    s.hash = scenario_hash(config);

    const json& units = config.at("units");
    if (units.value("time", "") != "years" || units.value("rate", "") != "per year")
        fail("units must be {\"time\": \"years\", \"rate\": \"per year\"}");
    const json& seed = config.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
        fail("'seed' must be a non-negative integer");
    s.seed = seed.get<std::uint64_t>();

    s.grid = make_grid(config.at("grid"));
    s.x0 = curvespace::initial_discounted_curve(
               curvespace::flat_forwards(s.grid, number(config.at("curve"), "flat_rate", "curve")))
               .values;
    s.model = make_model(config.at("model"), s.grid);

    const json& p = config.at("payout");
    const auto kind = p.at("kind").is_null() ? std::string("none") : get<std::string>(p, "kind", "payout");
    if (kind == "zcb_call" || kind == "bond") {
        const double expiry = number(p, "expiry", "payout");
        const double maturity = number(p, "maturity", "payout");
        if (kind == "bond") {
            s.payout.emplace(hedging::Payout::bond(expiry, maturity), s.grid);
        } else {
            double strike = 0.0;
            const json& k = p.at("strike");
            if (k.is_string() && k.get<std::string>() == "atm") {
                const std::size_t te = s.grid->require_node(expiry), tm = s.grid->require_node(maturity);
                strike = s.x0[tm] / s.x0[te];
            } else if (k.is_number()) {
                strike = k.get<double>();
            } else {
                fail("'payout.strike' must be a number or \"atm\"");
            }
            s.payout.emplace(hedging::Payout::zcb_call(expiry, maturity, strike, number(p, "arrears", "payout")),
                             s.grid);
        }
    } else if (kind != "none") {
        fail("unknown payout kind '" + kind + "'");
    }

    const json& h = config.at("hedge");
    s.method = get<std::string>(h, "method", "hedge");
    if (s.method != "prehedge" && s.method != "finite_factor") fail("'hedge.method' must be prehedge or finite_factor");
    s.hedge_maturities = get<std::vector<double>>(h, "maturities", "hedge");
    if (!h.at("expect_support").is_null()) s.expect_support = get<bool>(h, "expect_support", "hedge");

    const json& mc = config.at("mc");
    double horizon = s.payout ? s.payout->payout().settlement() : 5.0;
    if (!mc.at("horizon").is_null()) horizon = number(mc, "horizon", "mc");
    std::size_t steps = count(mc, "steps", "mc");
    if (!mc.at("dt").is_null()) {
        const double dt = number(mc, "dt", "mc");
        if (!(dt > 0.0)) fail("'mc.dt' must be positive");
        const double n = horizon / dt;
        if (std::abs(n - std::round(n)) > 1e-6 * n) fail("'mc.dt' must divide the horizon");
        steps = static_cast<std::size_t>(std::llround(n));
    }
    if (steps == 0) fail("'mc.steps' must be positive");
    auto& sim = s.hedge.sim;
    sim.time = dynamics::TimeGrid::uniform(horizon, steps);
    sim.paths = count(mc, "paths", "mc");
    sim.seed = s.seed;
    sim.antithetic = get<bool>(mc, "antithetic", "mc");
    sim.refine = static_cast<unsigned>(count(mc, "refine", "mc"));
    if (!mc.at("scheme").is_null()) {
        try {
            sim.scheme = dynamics::parse_scheme(get<std::string>(mc, "scheme", "mc"));
        } catch (const PreconditionError& e) {
            fail(e.what());
        }
    }
    if (sim.paths == 0) fail("'mc.paths' must be positive");
    s.hedge.inner_paths = count(mc, "inner_paths", "mc");
    s.hedge.inner_antithetic = get<bool>(mc, "inner_antithetic", "mc");
    s.hedge.rebalance_every = count(mc, "rebalance_every", "mc");
    s.hedge.price_paths = count(mc, "price_paths", "mc");
    s.hedge.analytic = get<bool>(mc, "analytic", "mc");
    s.hedge.budget_cap = number(mc, "budget_cap", "mc");
    s.hedge.record_paths = count(mc, "record_paths", "mc");
    s.bump_eps = number(mc, "bump_eps", "mc");
    if (s.hedge.rebalance_every == 0) fail("'mc.rebalance_every' must be positive");

    const json& out = config.at("output");
    s.write_paths = get<bool>(out, "paths_csv", "output");
    s.paths_recorded = count(out, "paths_recorded", "output");
    return s;
}

}  // namespace

Scenario build_scenario(const json& config) {
    try {
        return build(config);
    } catch (const json::exception& e) {
        fail(std::string("malformed scenario: ") + e.what());
    }
}

}  // namespace hjm::cli
