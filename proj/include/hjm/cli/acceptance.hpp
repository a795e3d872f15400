#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hjm/curvespace/grid.hpp"
#include "hjm/dynamics/volatility.hpp"

namespace hjm::cli {

/// Ho-Lee (tau = 0.01), a three-factor Gaussian model and the local model
/// (10 factors) on the given grid.
std::vector<dynamics::ModelPtr> catalog_models(const curvespace::GridPtr& grid);

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string summary;
    nlohmann::json detail = nlohmann::json::object();
};

nlohmann::json to_json(const CriterionResult& r);

constexpr int kCriteria = 10;

/// Runs acceptance criterion `id` (1..10) at its documented scale.
CriterionResult run_criterion(int id, unsigned threads = 1);

}  // namespace hjm::cli
