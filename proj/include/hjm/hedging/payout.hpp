#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hjm/curvespace/grid.hpp"
#include "hjm/curvespace/portfolio.hpp"
#include "hjm/malliavin/nested.hpp"

namespace hjm::hedging {

/// European claim xi = g(P_T(T_1), ..., P_T(T_n)) settled at T + arrears.
struct Payout {
    using Fn = std::function<double(std::span<const double> bonds)>;
    using Grad = std::function<void(std::span<const double> bonds, std::span<double> out)>;

    std::string kind;  // "zcb_call", "bond", "basket"
    std::string label;
    double expiry = 0.0;
    std::vector<double> maturities;
    double arrears = 0.0;
    double strike = 0.0;     // zcb_call only
    double lipschitz = 0.0;  // declared C_1 of the modified payout
    Fn g;
    Grad dg;

    /// (P_T(T_1) - K)^+, C_1 = 1 + K.
    static Payout zcb_call(double expiry, double maturity, double strike, double arrears = 0.0);
    /// xi = P_T(T_1): the modified payout is x(T_1), hedged by the bond itself.
    static Payout bond(double expiry, double maturity);
    /// Arbitrary smooth g with its gradient.
    static Payout basket(double expiry, std::vector<double> maturities, Fn g, Grad dg, double lipschitz,
                         std::string label = "basket");

    double longest_underlying() const;
    double settlement() const { return expiry + arrears; }
};

/// Payout resolved on a grid: node indices for T, T_i and the settlement date.
class BoundPayout final : public malliavin::CurveFunctional {
public:
    BoundPayout(Payout payout, curvespace::GridPtr grid);

    /// x(T + dT) g(x(T_1) / x(T), ...); with dT = 0 this is the modified payout.
    double value(std::span<const double> x) const override;
    void gradient(std::span<const double> x, std::span<double> out) const override;

    /// Undiscounted payoff g(ratios) fixed at T.
    double payoff(std::span<const double> x) const;
    curvespace::PortfolioMeasure subgradient(std::span<const double> x, double as_of = 0.0) const;

    const Payout& payout() const { return payout_; }
    const curvespace::GridPtr& grid() const { return grid_; }
    std::size_t expiry_node() const { return expiry_node_; }
    std::size_t settlement_node() const { return settle_node_; }
    std::span<const std::size_t> underlying_nodes() const { return nodes_; }

private:
    void ratios(std::span<const double> x, std::span<double> out) const;

    Payout payout_;
    curvespace::GridPtr grid_;
    std::size_t expiry_node_ = 0;
    std::size_t settle_node_ = 0;
    std::vector<std::size_t> nodes_;
};

/// g~(x) = x(T) g(x(T_1)/x(T), ...).
double modified_payout(const BoundPayout& payout, std::span<const double> x);

struct ArrearsValue {
    double value = 0.0;          // g^(x) = x(T + dT) g(...)
    double carry_units = 0.0;    // xi units of the (T + dT)-bond held over [T, T + dT]
    double carry_maturity = 0.0;
};

ArrearsValue arrears_payout(const BoundPayout& payout, std::span<const double> x);

/// Largest |g~(x) - g~(y)| / |x - y|_F1v over random pairs of positive curves
/// around x0 (and pairs straddling the exercise boundary, where the ratio is
/// largest for kinked payouts).
double sampled_lipschitz(const BoundPayout& payout, std::span<const double> x0, std::size_t pairs,
                         std::uint64_t seed);

}  // namespace hjm::hedging
