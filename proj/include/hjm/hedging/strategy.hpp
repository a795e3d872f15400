#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjm/curvespace/curves.hpp"
#include "hjm/curvespace/portfolio.hpp"
#include "hjm/dynamics/parallel.hpp"
#include "hjm/dynamics/simulate.hpp"
#include "hjm/hedging/payout.hpp"
#include "hjm/malliavin/nested.hpp"

namespace hjm::hedging {

/// Pre-hedge at one (t, state): node weights with Monte Carlo standard errors.
struct Prehedge {
    curvespace::PortfolioMeasure phi;
    std::vector<double> se;
    dynamics::MeanSe value;   // E{xi~ | F_t}
    double dual_norm = 0.0;
    double dual_bound = 0.0;  // C_1 exp(C^2 (T - t) / 2)
};

/// phi_t = E{Y_{t,T}^T grad g~(P~_T) | F_t} from inner paths started at step l.
/// `sigma_lipschitz` is the constant C of the volatility used in the bound.
Prehedge prehedge(const dynamics::VolatilityModel& model, dynamics::Scheme scheme, const BoundPayout& payout,
                  const dynamics::TimeGrid& time, std::size_t l, std::span<const double> x,
                  const malliavin::NestedConfig& config, double sigma_lipschitz = 0.0);

/// varphi = phi + (V - <phi, P>) delta_t, so that <varphi, P> = V.
curvespace::PortfolioMeasure self_financing_complete(const curvespace::PortfolioMeasure& phi, double wealth,
                                                     const curvespace::BondCurve& bonds);
/// Discounted form: the cash atom is sized with P~_t(t).
curvespace::PortfolioMeasure self_financing_complete(const curvespace::PortfolioMeasure& phi,
                                                     double discounted_wealth,
                                                     const curvespace::DiscountedCurve& discounted);

struct WeightSlice {
    double t = 0.0;
    std::size_t step = 0;
    std::size_t path = 0;
    curvespace::PortfolioMeasure phi;
    std::vector<double> se;
    curvespace::PortfolioMeasure varphi;  // discounted self-financing completion
    double wealth = 0.0;                  // discounted wealth at t
    double dual_norm = 0.0;
    double dual_bound = 0.0;
};

struct ErrorStats {
    double rms = 0.0;
    double sd_payout = 0.0;
    double relative_rms = 0.0;
    double mean = 0.0;
    double max_abs = 0.0;
    std::size_t paths = 0;
};

struct SupportVerdict {
    bool pass = true;
    std::size_t violations = 0;
    double worst_time = 0.0;
    double worst_maturity = 0.0;
    double worst_weight = 0.0;
    double worst_threshold = 0.0;
};

struct HedgeReport {
    std::string method;
    std::string payout;
    double price = 0.0;          // V_0 used by the wealth recursion
    double price_se = 0.0;
    dynamics::MeanSe mc_price;   // E{xi~} over the outer paths
    double longest_underlying = 0.0;
    std::vector<double> hedge_maturities;
    std::vector<WeightSlice> slices;
    std::vector<double> terminal_errors;  // xi~ - V~_T per outer path (discounted)
    ErrorStats error;
    ErrorStats undiscounted_error;        // B_T (xi~ - V~_T)
    double estimated_cost = 0.0;
    std::optional<SupportVerdict> support;
};

struct HedgeConfig {
    dynamics::SimulationConfig sim;   // time grid ends at the payout expiry (or settlement)
    std::size_t rebalance_every = 1;  // in simulation steps
    std::size_t inner_paths = 512;
    bool inner_antithetic = true;
    bool analytic = true;             // closed-form hedge when one exists
    double budget_cap = 2e11;         // cap on inner path-steps x nodes x factors
    std::size_t record_paths = 1;     // slices are kept for the first paths
    std::size_t price_paths = 16384;  // plain Monte Carlo paths for V_0 without a closed form
    double sigma_lipschitz = 0.0;     // 0: estimated from sampled states
};

/// Cost of the nested scheme in path-steps x nodes x factors.
double replication_cost(const dynamics::VolatilityModel& model, const HedgeConfig& config, bool nested);

/// Backtest of the Clark-Ocone pre-hedge: along each outer path, phi at every
/// rebalance time (closed form or nested Monte Carlo), discounted wealth
/// V~ += <phi, dP~>. With a settlement lag the claim is carried in the
/// settlement bond from T on. Throws BudgetError above the cost cap.
HedgeReport replicate(const dynamics::VolatilityModel& model, const BoundPayout& payout, std::span<const double> x0,
                      const HedgeConfig& config);

/// Replication with bonds of prescribed maturities in a d-factor Gaussian
/// model: phi solves sum_i phi^i sigma* delta_{T_i} = alpha on the d x d
/// system. Throws PreconditionError when its condition number exceeds 1e8.
HedgeReport finite_factor_hedge(const dynamics::GaussianHjm& model, const BoundPayout& payout,
                                std::span<const double> x0, std::span<const double> hedge_maturities,
                                const HedgeConfig& config);

/// Every atom outside [t, T'] (cash excluded) must satisfy
/// |weight| <= max(abs_tol, z s.e.).
SupportVerdict support_check(const std::vector<WeightSlice>& slices, double longest_underlying,
                             double abs_tol = 1e-6, double z = 3.0);

struct DirectionalDerivative {
    double value = 0.0;
    double se = 0.0;
};

/// E{xi~} over Monte Carlo paths from x0.
dynamics::MeanSe price(const dynamics::VolatilityModel& model, const BoundPayout& payout, std::span<const double> x0,
                       const dynamics::SimulationConfig& sim);

/// (price(x0 + eps h) - price(x0 - eps h)) / 2 eps with common random numbers.
DirectionalDerivative bump_revalue(const dynamics::VolatilityModel& model, const BoundPayout& payout,
                                   std::span<const double> x0, std::span<const double> h, double eps,
                                   const dynamics::SimulationConfig& sim);

/// Strategy at t = 0 assembled from node bumps h = e_i.
Prehedge bump_revalue_strategy(const dynamics::VolatilityModel& model, const BoundPayout& payout,
                               std::span<const double> x0, double eps, const dynamics::SimulationConfig& sim);

struct StrategyPair {
    double t = 0.0;
    std::vector<double> x;
    double weight = 1.0;  // time weight in the integrated comparison
    curvespace::PortfolioMeasure a, b;
    std::vector<double> se_a, se_b;
};

struct UniquenessGap {
    double max_dual_gap = 0.0;    // largest |A - B|_F* / (3 |s.e.|_F*) ratio numerator
    double dual_threshold = 0.0;  // matching 3 s.e. threshold
    double sigma_gap = 0.0;       // sqrt(sum weight |sigma*(A - B)|^2)
    double sigma_threshold = 0.0; // 3 sqrt(sum weight E|sigma* noise|^2)
    bool pass = true;
};

UniquenessGap uniqueness_gap(const dynamics::VolatilityModel& model, const std::vector<StrategyPair>& pairs,
                             double z = 3.0);

}  // namespace hjm::hedging
