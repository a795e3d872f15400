#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjm/curvespace/grid.hpp"
#include "hjm/dynamics/simulate.hpp"
#include "hjm/dynamics/volatility.hpp"

namespace hjm::cli {

/// Outcome of one property check with its measured numbers.
struct Check {
    std::string name;
    bool pass = false;
    nlohmann::json detail = nlohmann::json::object();
};

inline Check named(std::string name) {
    Check c;
    c.name = std::move(name);
    return c;
}

nlohmann::json to_json(const Check& c);

/// Embedding constants by quadrature against the closed forms for
/// v = (1+s)^a, w = (1+s)^q.
Check sobolev_constants(double v_power, double w_power, double tol = 1e-6);

/// Mean terminal discounted prices within 3 s.e. of the initial curve, and
/// matured nodes frozen bit-exactly (checked on the first freeze_paths paths).
Check martingale_and_freeze(const dynamics::VolatilityModel& model, std::span<const double> x0,
                            const dynamics::SimulationConfig& sim, std::size_t freeze_paths = 256);

/// Exponential martingale with its analytic integrand: residual on a grid of
/// `steps` and the gain from halving the step.
Check reconstruction_refinement(std::size_t steps, std::size_t paths, std::uint64_t seed, double max_relative = 0.05);

/// Duality check on three functional/direction pairs.
Check integration_by_parts(std::size_t paths);

/// Mean-square Picard differences along simulated paths; ratio n -> n+1 must
/// stay below 1.5 C^2 (T - t) / n, and below 1/2 once n exceeds C^2 (T - t).
Check picard_decay(const dynamics::VolatilityModel& model, std::span<const double> x0, double horizon,
                   std::size_t steps, std::size_t paths, std::size_t iterations, std::uint64_t seed);

/// E|Y x|^2 <= exp(C^2 T) |x|^2 at 3 relative s.e.
Check growth_bound(const dynamics::VolatilityModel& model, std::span<const double> x0, double horizon,
                   std::size_t steps, std::size_t paths, std::uint64_t seed);

/// |Y h - central difference|_F1v <= tol |Y h|_F1v on every path.
Check tangent_vs_difference(const dynamics::VolatilityModel& model, std::span<const double> x0, double horizon,
                            std::size_t steps, std::size_t paths, std::uint64_t seed, double tol = 0.01);

/// Dual norm of the derivative functional at t over successive halvings of a
/// uniform grid; must increase strictly.
Check derivative_divergence(double s_max, std::size_t intervals, std::size_t halvings, double t);

/// Locality and Lipschitz diagnostics on sampled states.
Check model_diagnostics(const dynamics::VolatilityModel& model, std::span<const double> x0, std::uint64_t seed);

}  // namespace hjm::cli
