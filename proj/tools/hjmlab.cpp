#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hjm/cli/commands.hpp"
#include "hjm/cli/scenario.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    unsigned threads = 1;
    std::vector<std::string> overrides;
    std::vector<int> criteria;
};

const char* describe(const std::string& name) {
    if (name == "simulate") return "simulate discounted curves; martingale and freeze report";
    if (name == "price") return "Monte Carlo price V0 with standard error";
    if (name == "hedge") return "pre-hedge weights at t = 0 with standard errors";
    if (name == "replicate") return "hedging backtest along outer paths";
    if (name == "verify") return "property suite on the scenario model";
    return "acceptance table";
}

}  // namespace

int main(int argc, char** argv) {
    using namespace hjm::cli;
    CLI::App app{"hjmlab: HJM curve simulation, Malliavin pre-hedges and replication backtests"};
    app.require_subcommand(1, 1);
    Flags flags;
    for (const auto& name : subcommands()) {
        auto* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", flags.config, "scenario JSON file")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "64-bit seed (overrides the scenario)");
        sub->add_option("--out", flags.out, "output root; runs go to <out>/<run hash>");
        sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--override", flags.overrides, "key.path=value, repeatable")->take_all();
        if (name == "table") sub->add_option("--criteria", flags.criteria, "criterion ids (default: all)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        json config = flags.config.empty() ? default_config() : load_config(flags.config);
        for (const auto& o : flags.overrides) apply_override(config, o);
        if (flags.seed) config["seed"] = *flags.seed;
        const Scenario scenario = build_scenario(config);
        RunOptions options;
        options.out_root = flags.out;
        options.threads = flags.threads;
        options.criteria = flags.criteria;
        const RunResult r = run(command, scenario, options);
        std::printf("%s: %s -> %s/report.json\n", command.c_str(), r.exit_code == exit_ok ? "pass" : "verdict failed",
                    r.directory.c_str());
        return r.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: %s\n", command.c_str(), e.what());
        return exit_code_for(e);
    }
}
