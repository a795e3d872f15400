#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjm/curvespace/grid.hpp"
#include "hjm/dynamics/volatility.hpp"
#include "hjm/hedging/payout.hpp"
#include "hjm/hedging/strategy.hpp"

namespace hjm::cli {

using json = nlohmann::json;

/// Built-in defaults; every scenario file is merged over them.
const json& default_config();

/// Reads a scenario file and merges it over the defaults. Throws ConfigError.
json load_config(const std::string& path);

/// key.path=value; the value is parsed as JSON when possible, else kept as a
/// string. Unknown keys are rejected.
void apply_override(json& config, const std::string& assignment);

/// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string scenario_hash(const json& config);

struct Scenario {
    json config;
    std::string hash;
    std::uint64_t seed = 0;

    curvespace::GridPtr grid;
    std::vector<double> x0;
    dynamics::ModelPtr model;
    std::optional<hedging::BoundPayout> payout;

    std::string method;  // "prehedge" or "finite_factor"
    std::vector<double> hedge_maturities;
    std::optional<bool> expect_support;
    double bump_eps = 1e-4;
    bool write_paths = false;
    std::size_t paths_recorded = 4;

    hedging::HedgeConfig hedge;  // hedge.sim carries the Monte Carlo settings
};

/// Validates the resolved configuration and builds every object it names.
/// Schema problems raise ConfigError; values rejected by the library raise
/// PreconditionError.
Scenario build_scenario(const json& config);

}  // namespace hjm::cli
