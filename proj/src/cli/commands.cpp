#include "hjm/cli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hjm/cli/acceptance.hpp"
#include "hjm/cli/properties.hpp"
#include "hjm/core/error.hpp"
#include "hjm/dynamics/simulate.hpp"
#include "hjm/hedging/gaussian.hpp"
#include "hjm/hedging/strategy.hpp"

namespace hjm::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    Csv(const fs::path& path, const std::string& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        out_ << header << '\n';
    }
    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            out_ << (first ? "" : ",") << num(v);
            first = false;
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

const hedging::BoundPayout& need_payout(const Scenario& s, const std::string& command) {
    if (!s.payout) throw ConfigError(command + " needs a payout (payout.kind is null)");
    return *s.payout;
}

dynamics::TimeGrid up_to(const dynamics::TimeGrid& time, double t) {
    const std::size_t l = time.index_of(t);
    require(l <= time.steps(), "time " + num(t) + " is not on the simulation grid");
    return dynamics::TimeGrid(std::vector<double>(time.times().begin(), time.times().begin() + static_cast<long>(l) + 1));
}

json mean_se_json(const dynamics::MeanSe& m) { return json{{"mean", m.mean}, {"se", m.se}}; }

json error_json(const hedging::ErrorStats& e) {
    return json{{"rms", e.rms},       {"sd_payout", e.sd_payout}, {"relative_rms", e.relative_rms},
                {"mean", e.mean},     {"max_abs", e.max_abs},     {"paths", e.paths}};
}

json support_json(const hedging::SupportVerdict& v, double longest) {
    return json{{"pass", v.pass},
                {"label", v.pass ? std::string("pass") : "fail beyond T'=" + num(longest)},
                {"violations", v.violations},
                {"worst_time", v.worst_time},
                {"worst_maturity", v.worst_maturity},
                {"worst_weight", v.worst_weight},
                {"worst_threshold", v.worst_threshold}};
}

void write_weights(const fs::path& dir, const std::vector<hedging::WeightSlice>& slices, std::size_t path) {
    Csv csv(dir / "hedge_weights.csv", "t,maturity,weight,stderr");
    for (const auto& s : slices) {
        if (s.path != path) continue;
        const auto& g = *s.phi.grid();
        for (std::size_t i = 0; i < g.size(); ++i)
            csv.row({s.t, g.node(i), s.phi.weight(i), s.se.empty() ? 0.0 : s.se[i]});
    }
}

bool support_verdict(const Scenario& s, bool pass) { return s.expect_support ? pass == *s.expect_support : pass; }

json do_simulate(const Scenario& s, const RunOptions& o, const fs::path& dir, json& verdicts) {
    auto sim = s.hedge.sim;
    sim.threads = o.threads;
    const Check c = martingale_and_freeze(*s.model, s.x0, sim, 256);
    verdicts["martingale"] = c.detail["martingale_pass"];
    verdicts["freeze"] = c.detail["freeze_pass"];
    verdicts["reproducible"] = c.detail["rerun_identical"];
    if (s.write_paths) {
        auto rec = sim;
        rec.paths = std::max<std::size_t>(s.paths_recorded + s.paths_recorded % 2, 2);
        rec.store_states = true;
        const auto b = dynamics::simulate(*s.model, s.x0, rec);
        Csv csv(dir / "paths.csv", "path,t,maturity,discounted_price");
        for (std::size_t p = 0; p < s.paths_recorded; ++p)
            for (std::size_t l = 0; l <= b.time.steps(); ++l)
                for (std::size_t i = 0; i < b.nodes; ++i)
                    csv.row({static_cast<double>(p), b.time.time(l), s.grid->node(i), b.state(p, l)[i]});
    }
    return c.detail;
}

json do_price(const Scenario& s, const RunOptions& o, json& verdicts) {
    const auto& payout = need_payout(s, "price");
    auto sim = s.hedge.sim;
    sim.threads = o.threads;
    sim.time = up_to(sim.time, payout.payout().expiry);
    const auto mc = hedging::price(*s.model, payout, s.x0, sim);
    json r{{"payout", payout.payout().label}, {"V0", mc.mean}, {"se", mc.se}, {"paths", sim.paths}};
    if (hedging::has_gaussian_oracle(*s.model, payout)) {
        const auto* g = dynamic_cast<const dynamics::GaussianHjm*>(s.model.get());
        const double cf = hedging::gaussian_zcb_call(*g, payout, 0.0, s.x0).price;
        r["closed_form"] = cf;
        verdicts["price_matches_closed_form"] = std::abs(mc.mean - cf) <= 3.0 * mc.se;
    }
    return r;
}

json do_hedge(const Scenario& s, const RunOptions& o, const fs::path& dir, json& verdicts) {
    const auto& payout = need_payout(s, "hedge");
    const auto time = up_to(s.hedge.sim.time, payout.payout().expiry);
    const auto scheme = s.hedge.sim.scheme.value_or(dynamics::default_scheme(*s.model));
    malliavin::NestedConfig nc;
    nc.inner_paths = s.hedge.inner_paths;
    nc.seed = s.seed;
    nc.antithetic = s.hedge.inner_antithetic;
    nc.threads = o.threads;
    const auto ph = hedging::prehedge(*s.model, scheme, payout, time, 0, s.x0, nc);

    hedging::WeightSlice slice;
    slice.phi = ph.phi;
    slice.se = ph.se;
    write_weights(dir, {slice}, 0);
    const double longest = payout.payout().longest_underlying();
    const auto support = hedging::support_check({slice}, longest);
    verdicts["support"] = support_verdict(s, support.pass);

    double max_rel = 0.0;
    for (std::size_t i = 0; i < ph.se.size(); ++i)
        if (ph.phi.weight(i) != 0.0) max_rel = std::max(max_rel, ph.se[i] / std::abs(ph.phi.weight(i)));
    verdicts["dual_norm_bound"] = ph.dual_norm <= ph.dual_bound * (1.0 + 3.0 * max_rel);

    json r{{"payout", payout.payout().label},
           {"scheme", dynamics::scheme_name(scheme)},
           {"inner_paths", nc.inner_paths},
           {"value", mean_se_json(ph.value)},
           {"dual_norm", ph.dual_norm},
           {"dual_bound", ph.dual_bound},
           {"support", support_json(support, longest)}};
    json atoms = json::array();
    for (std::size_t i = 0; i < ph.se.size(); ++i)
        if (ph.phi.weight(i) != 0.0 || ph.se[i] != 0.0)
            atoms.push_back({{"maturity", s.grid->node(i)}, {"weight", ph.phi.weight(i)}, {"se", ph.se[i]}});
    r["weights"] = std::move(atoms);

    if (hedging::has_gaussian_oracle(*s.model, payout)) {
        const auto* g = dynamic_cast<const dynamics::GaussianHjm*>(s.model.get());
        const auto cf = hedging::gaussian_zcb_call(*g, payout, 0.0, s.x0);
        const std::size_t t1 = payout.underlying_nodes()[0], te = payout.expiry_node();
        r["closed_form"] = {{"price", cf.price}, {"weight_maturity", cf.weight_maturity}, {"weight_expiry", cf.weight_expiry}};
        verdicts["weights_match_closed_form"] = std::abs(ph.phi.weight(t1) - cf.weight_maturity) <= 3.0 * ph.se[t1] &&
                                                std::abs(ph.phi.weight(te) - cf.weight_expiry) <= 3.0 * ph.se[te];
        verdicts["price_matches_closed_form"] = std::abs(ph.value.mean - cf.price) <= 3.0 * ph.value.se;
    }
    return r;
}

json do_replicate(const Scenario& s, const RunOptions& o, const fs::path& dir, json& verdicts) {
    const auto& payout = need_payout(s, "replicate");
    auto config = s.hedge;
    config.sim.threads = o.threads;
    hedging::HedgeReport rep;
    if (s.method == "finite_factor") {
        const auto* g = dynamic_cast<const dynamics::GaussianHjm*>(s.model.get());
        if (!g) throw ConfigError("finite_factor hedging needs a gaussian_hjm model");
        rep = hedging::finite_factor_hedge(*g, payout, s.x0, s.hedge_maturities, config);
    } else {
        rep = hedging::replicate(*s.model, payout, s.x0, config);
    }
    write_weights(dir, rep.slices, 0);
    json r{{"method", rep.method},
           {"payout", rep.payout},
           {"V0", rep.price},
           {"V0_se", rep.price_se},
           {"mc_price", mean_se_json(rep.mc_price)},
           {"longest_underlying", rep.longest_underlying},
           {"hedge_maturities", rep.hedge_maturities},
           {"error", error_json(rep.error)},
           {"undiscounted_error", error_json(rep.undiscounted_error)},
           {"estimated_cost", rep.estimated_cost},
           {"steps", config.sim.time.steps()},
           {"outer_paths", config.sim.paths}};
    if (rep.support) {
        r["support"] = support_json(*rep.support, rep.longest_underlying);
        verdicts["support"] = support_verdict(s, rep.support->pass);
    }
    if (s.expect_support) r["expected_support"] = *s.expect_support ? "pass" : "fail beyond T'";
    return r;
}

json do_verify(const Scenario& s, const RunOptions& o, json& verdicts) {
    const json& grid = s.config.at("grid");
    std::vector<Check> checks;
    checks.push_back(sobolev_constants(grid.at("v_power").get<double>(), grid.at("w_power").get<double>()));
    checks.push_back(model_diagnostics(*s.model, s.x0, s.seed));
    auto sim = s.hedge.sim;
    sim.threads = o.threads;
    checks.push_back(martingale_and_freeze(*s.model, s.x0, sim, 256));
    checks.back().detail.erase("nodes");
    const double horizon = sim.time.horizon();
    const std::size_t steps = std::min<std::size_t>(sim.time.steps(), 50);
    checks.push_back(picard_decay(*s.model, s.x0, horizon, steps, std::min<std::size_t>(sim.paths, 200), 6, s.seed));
    checks.push_back(growth_bound(*s.model, s.x0, horizon, steps, std::min<std::size_t>(sim.paths, 400), s.seed));
    checks.push_back(tangent_vs_difference(*s.model, s.x0, horizon, steps, 8, s.seed));
    checks.push_back(integration_by_parts(4000));
    checks.push_back(derivative_divergence(s.grid->last(), s.grid->size() - 1, 4, std::min(1.0, s.grid->node(1))));
    if (s.payout) {
        const auto time = up_to(sim.time, s.payout->payout().expiry);
        malliavin::NestedConfig nc;
        nc.inner_paths = s.hedge.inner_paths;
        nc.seed = s.seed;
        nc.threads = o.threads;
        const auto ph = hedging::prehedge(*s.model, sim.scheme.value_or(dynamics::default_scheme(*s.model)), *s.payout,
                                          time, 0, s.x0, nc);
        hedging::WeightSlice slice;
        slice.phi = ph.phi;
        slice.se = ph.se;
        const double longest = s.payout->payout().longest_underlying();
        const auto v = hedging::support_check({slice}, longest);
        Check c = named("prehedge_support");
        c.pass = support_verdict(s, v.pass);
        c.detail = support_json(v, longest);
        checks.push_back(std::move(c));
    }
    json r = json::array();
    for (const auto& c : checks) {
        verdicts[c.name] = c.pass;
        r.push_back(to_json(c));
    }
    return json{{"checks", std::move(r)}};
}

json do_table(const RunOptions& o, const fs::path& dir, json& verdicts) {
    std::vector<int> ids = o.criteria;
    if (ids.empty())
        for (int i = 1; i <= kCriteria; ++i) ids.push_back(i);
    json rows = json::array();
    std::ofstream csv(dir / "table.csv");
    csv << "criterion,title,pass,summary\n";
    for (int id : ids) {
        const auto r = run_criterion(id, o.threads);
        std::printf("criterion %2d  %-36s %s  %s\n", r.id, r.title.c_str(), r.pass ? "PASS" : "FAIL", r.summary.c_str());
        std::fflush(stdout);
        verdicts["criterion_" + std::to_string(id)] = r.pass;
        rows.push_back(to_json(r));
        std::string summary = r.summary;
        for (char& ch : summary)
            if (ch == '"') ch = '\'';
        csv << r.id << ",\"" << r.title << "\"," << (r.pass ? "pass" : "fail") << ",\"" << summary << "\"\n";
    }
    return json{{"criteria", std::move(rows)}};
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"simulate", "price", "hedge", "replicate", "verify", "table"};
    return names;
}

RunResult run(const std::string& command, const Scenario& scenario, const RunOptions& options) {
    if (std::find(subcommands().begin(), subcommands().end(), command) == subcommands().end())
        throw ConfigError("unknown subcommand '" + command + "'");
    RunResult out;
    // one directory per (subcommand, scenario) so runs never overwrite each other
    const std::string run_id = fnv1a_hex(command + '\n' + json(options.criteria).dump() + '\n' + scenario.config.dump());
    const fs::path dir = fs::path(options.out_root) / run_id;
    fs::create_directories(dir);
    out.directory = dir.string();

    json verdicts = json::object();
    json results;
    if (command == "simulate") results = do_simulate(scenario, options, dir, verdicts);
    else if (command == "price") results = do_price(scenario, options, verdicts);
    else if (command == "hedge") results = do_hedge(scenario, options, dir, verdicts);
    else if (command == "replicate") results = do_replicate(scenario, options, dir, verdicts);
    else if (command == "verify") results = do_verify(scenario, options, verdicts);
    else results = do_table(options, dir, verdicts);

    bool pass = true;
    for (const auto& [name, v] : verdicts.items()) pass = pass && v.get<bool>();
    out.report = json{{"command", command},
                      {"version", kVersion},
                      {"scenario_hash", scenario.hash},
                      {"run_hash", run_id},
                      {"seed", scenario.seed},
                      {"config", scenario.config},
                      {"results", std::move(results)},
                      {"verdicts", std::move(verdicts)},
                      {"pass", pass}};
    std::ofstream(dir / "report.json") << out.report.dump(2) << '\n';
    out.exit_code = pass ? exit_ok : exit_verdict;
    return out;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return exit_config;
    if (dynamic_cast<const PreconditionError*>(&e)) return exit_precondition;
    if (dynamic_cast<const BudgetError*>(&e)) return exit_budget;
    return exit_verdict;
}

}  // namespace hjm::cli
