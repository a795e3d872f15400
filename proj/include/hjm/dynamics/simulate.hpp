#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjm/curvespace/curves.hpp"
#include "hjm/dynamics/rng.hpp"
#include "hjm/dynamics/time_grid.hpp"
#include "hjm/dynamics/volatility.hpp"

namespace hjm::dynamics {

/// euler:      x' = x (1 + h dW)
/// log_euler:  x' = x exp(h dW - |h|^2 dt / 2), node by node
enum class Scheme { euler, log_euler };

Scheme default_scheme(const VolatilityModel& model);
Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);

/// One time step of the discounted-curve recursion, with reusable workspace.
class Stepper {
public:
    Stepper(const VolatilityModel& model, Scheme scheme);

    /// Loadings h(t, x) used by the last step (stale when every node had matured).
    std::span<const double> loadings() const { return h_; }

    /// Advances x from t by dt using the Brownian increment dw (one per factor).
    /// Matured nodes are left untouched. Returns false when a node went
    /// non-positive (possible only under the Euler scheme).
    bool step(double t, double dt, std::span<double> x, std::span<const double> dw);

    const VolatilityModel& model() const { return *model_; }
    Scheme scheme() const { return scheme_; }

private:
    const VolatilityModel* model_;
    Scheme scheme_;
    std::vector<double> h_;
    std::vector<double> z_;
    std::vector<double> q_;
    std::vector<double> ones_;
};

struct SimulationConfig {
    TimeGrid time;
    std::size_t paths = 1000;
    std::uint64_t seed = 0;
    std::optional<Scheme> scheme;  // default_scheme(model) when empty
    bool antithetic = false;
    /// Brownian-bridge refinement level: on a uniform grid, the increments of
    /// steps 2^r j .. 2^r (j + 1) - 1 sum to the increment of step j of the
    /// same run with 2^-r as many steps.
    unsigned refine = 0;
    bool store_states = false;
    bool store_increments = false;
    unsigned threads = 0;
    double max_flagged_fraction = 1e-3;
};

/// Simulated discounted curves. Terminal states are always kept; full
/// trajectories and Brownian increments only on request.
struct PathBundle {
    TimeGrid time;
    std::size_t nodes = 0;
    std::size_t factors = 0;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    bool antithetic = false;
    Scheme scheme = Scheme::log_euler;

    std::vector<double> terminal;    // paths x nodes
    std::vector<double> states;      // paths x (L + 1) x nodes
    std::vector<double> increments;  // paths x L x factors
    std::vector<std::uint8_t> flagged;
    std::size_t flagged_count = 0;

    std::span<const double> terminal_state(std::size_t p) const;
    std::span<const double> state(std::size_t p, std::size_t l) const;
    std::span<const double> increment(std::size_t p, std::size_t l) const;
};

/// Throws PreconditionError unless refinement r fits the grid.
void check_refinement(const TimeGrid& time, unsigned refine);

/// Brownian increment of step l: sqrt(dt_l) * normals, or with refinement r
/// the dyadic Brownian-bridge descendant of the coarse increment of step
/// l >> r (uniform grids only).
void draw_increments(const NoiseStream& stream, const TimeGrid& time, std::size_t l, std::span<double> dw,
                     unsigned refine = 0);

/// Runs one path from x (the state at t_first) to the horizon; x holds the
/// terminal state afterwards. Optional outputs receive the states at
/// t_first..t_L and the increments of steps first..L-1. Returns false when the
/// path was flagged for a non-positive value.
bool simulate_path(Stepper& stepper, const TimeGrid& time, std::size_t first, const NoiseStream& stream,
                   std::span<double> x, std::span<double> states = {}, std::span<double> increments = {},
                   unsigned refine = 0);

/// Monte Carlo simulation of dP~ = sigma(t, P~) dW from P~_0. Per-path output
/// depends only on (seed, path id). Throws NumericalError when more than
/// max_flagged_fraction of the paths lost positivity.
PathBundle simulate(const VolatilityModel& model, std::span<const double> x0, const SimulationConfig& config);

/// <tau_t(T), int_t^T tau_t(u) du>.
double hjm_drift(const GaussianHjm& model, double t, double maturity);

struct ForwardPathBundle {
    TimeGrid time;
    std::size_t nodes = 0;
    std::size_t paths = 0;
    std::vector<double> terminal_forwards;   // paths x nodes
    std::vector<double> terminal_discounted; // paths x nodes
    std::vector<double> log_bank_account;    // paths, log B_T

    std::span<const double> forwards(std::size_t p) const;
    std::span<const double> discounted(std::size_t p) const;
};

/// Forward-rate paths of a Gaussian model: Euler steps of
/// df = drift dt - <tau, dW>, driven by the same increments as simulate().
/// The terminal curve is converted to discounted bond prices with the
/// simulated bank account.
ForwardPathBundle simulate_forwards(const GaussianHjm& model, const curvespace::ForwardCurve& f0,
                                    const SimulationConfig& config);

}  // namespace hjm::dynamics
