#pragma once

#include <string>
#include <vector>

#include "hjm/cli/scenario.hpp"

namespace hjm::cli {

enum ExitCode : int { exit_ok = 0, exit_verdict = 1, exit_config = 2, exit_precondition = 3, exit_budget = 4 };

const std::vector<std::string>& subcommands();

struct RunOptions {
    std::string out_root = "out";
    unsigned threads = 1;
    std::vector<int> criteria;  // table only; empty means all
};

struct RunResult {
    int exit_code = exit_ok;
    std::string directory;  // out_root/<hash of subcommand and scenario>
    json report;
};

/// Executes a subcommand and writes report.json (plus hedge_weights.csv and
/// paths.csv where they apply) under out_root/<run hash>. Library errors
/// propagate to the caller.
RunResult run(const std::string& command, const Scenario& scenario, const RunOptions& options);

/// ConfigError 2, PreconditionError 3, BudgetError 4, anything else 1.
int exit_code_for(const std::exception& e);

}  // namespace hjm::cli
