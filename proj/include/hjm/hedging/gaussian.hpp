#pragma once

#include <span>

#include "hjm/curvespace/portfolio.hpp"
#include "hjm/dynamics/volatility.hpp"
#include "hjm/hedging/payout.hpp"

namespace hjm::hedging {

/// Closed-form call on a zero-coupon bond in a Gaussian model, in discounted
/// units: V = P~(T_1) Phi(d1) - K P~(T) Phi(d2).
struct GaussianCall {
    double price = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double total_vol = 0.0;      // sqrt of int_t^T |a(u, T_1) - a(u, T)|^2 du
    double weight_maturity = 0.0;  // Phi(d1), on the T_1-bond
    double weight_expiry = 0.0;    // -K Phi(d2), on the T-bond
};

double normal_cdf(double x);

/// int_t^T sum_k (a_k(u, T_1) - a_k(u, T))^2 du.
double gaussian_call_variance(const dynamics::GaussianHjm& model, double t, double expiry, double maturity);

GaussianCall gaussian_zcb_call(const dynamics::GaussianHjm& model, double t, double x_expiry, double x_maturity,
                               double expiry, double maturity, double strike);

/// Black-type formula for a given total volatility.
GaussianCall black_zcb_call(double total_vol, double x_expiry, double x_maturity, double strike);

/// Same, reading P~_t(T) and P~_t(T_1) from a discounted curve on the model grid.
GaussianCall gaussian_zcb_call(const dynamics::GaussianHjm& model, const BoundPayout& payout, double t,
                               std::span<const double> x);

/// Closed-form pre-hedge Phi(d1) delta_{T_1} - K Phi(d2) delta_T.
curvespace::PortfolioMeasure gaussian_prehedge(const dynamics::GaussianHjm& model, const BoundPayout& payout,
                                               double t, std::span<const double> x);
/// Same with a precomputed total volatility for (t, T, T_1).
curvespace::PortfolioMeasure gaussian_prehedge(const BoundPayout& payout, double t, std::span<const double> x,
                                               double total_vol);

/// True when the closed form applies: Gaussian model and a spot-settled call.
bool has_gaussian_oracle(const dynamics::VolatilityModel& model, const BoundPayout& payout);

/// A spot-settled bond claim is its own hedge in any model.
bool is_bond_claim(const BoundPayout& payout);

}  // namespace hjm::hedging
