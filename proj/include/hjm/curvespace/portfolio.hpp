#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hjm/curvespace/curves.hpp"
#include "hjm/curvespace/grid.hpp"

namespace hjm::curvespace {

struct Atom {
    double maturity = 0.0;
    double weight = 0.0;
};

/// Atomic measure sum_i c_i delta_{s_i} on grid nodes, plus an optional cash
/// atom at the valuation time (the bank-account position delta_t).
class PortfolioMeasure {
public:
    PortfolioMeasure() = default;
    explicit PortfolioMeasure(GridPtr grid, double as_of = 0.0);

    /// Throws PreconditionError when an atom is not on a grid node.
    static PortfolioMeasure from_atoms(GridPtr grid, const std::vector<Atom>& atoms, double as_of = 0.0);

    const GridPtr& grid() const { return grid_; }
    double as_of() const { return as_of_; }
    std::span<const double> weights() const { return weights_; }
    std::span<double> weights() { return weights_; }
    double weight(std::size_t node) const { return weights_[node]; }
    double& weight(std::size_t node) { return weights_[node]; }
    double cash() const { return cash_; }
    void set_cash(double c) { cash_ = c; }

    /// Nonzero node atoms in maturity order (cash excluded).
    std::vector<Atom> atoms() const;
    /// [min s_i, max s_i] over node atoms with |c_i| > tol; empty for the zero measure.
    std::optional<std::pair<double, double>> support_interval(double tol = 0.0) const;

    /// this += a * other (same grid and valuation time).
    PortfolioMeasure& add_scaled(double a, const PortfolioMeasure& other);

private:
    GridPtr grid_;
    double as_of_ = 0.0;
    std::vector<double> weights_;
    double cash_ = 0.0;
};

/// sum_i c_i x(s_i). A nonzero cash atom needs as_of on a node.
double pair(const PortfolioMeasure& phi, std::span<const double> x);
/// Pairing with bond prices; the cash atom pays P_t(t) = 1.
double pair(const PortfolioMeasure& phi, const BondCurve& p);
/// Pairing with discounted prices; the cash atom pays P~_t(t).
double pair(const PortfolioMeasure& phi, const DiscountedCurve& pt);

/// F1v* norm of the node atoms (cash excluded).
double dual_norm(const PortfolioMeasure& phi);

}  // namespace hjm::curvespace
