#include "hjm/curvespace/portfolio.hpp"

#include <cmath>
#include <sstream>

#include "hjm/core/error.hpp"
#include "hjm/curvespace/sobolev.hpp"

namespace hjm::curvespace {

PortfolioMeasure::PortfolioMeasure(GridPtr grid, double as_of)
    : grid_(std::move(grid)), as_of_(as_of), weights_(grid_ ? grid_->size() : 0, 0.0) {
    require(grid_ != nullptr, "PortfolioMeasure: missing grid");
}

PortfolioMeasure PortfolioMeasure::from_atoms(GridPtr grid, const std::vector<Atom>& atoms, double as_of) {
    PortfolioMeasure out(std::move(grid), as_of);
    for (const Atom& a : atoms) {
        auto idx = out.grid_->find_node(a.maturity);
        if (!idx) {
            std::ostringstream msg;
            msg << "PortfolioMeasure: atom at " << a.maturity << " is not a grid node";
            throw PreconditionError(msg.str());
        }
        out.weights_[*idx] += a.weight;
    }
    return out;
}

std::vector<Atom> PortfolioMeasure::atoms() const {
    std::vector<Atom> out;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        if (weights_[i] != 0.0) out.push_back({grid_->node(i), weights_[i]});
    return out;
}

std::optional<std::pair<double, double>> PortfolioMeasure::support_interval(double tol) const {
    std::optional<std::pair<double, double>> out;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (std::abs(weights_[i]) <= tol) continue;
        const double s = grid_->node(i);
        if (!out) out.emplace(s, s);
        else out->second = s;
    }
    return out;
}

PortfolioMeasure& PortfolioMeasure::add_scaled(double a, const PortfolioMeasure& other) {
    require(grid_ == other.grid_ || (grid_ && other.grid_ && grid_->size() == other.grid_->size()),
            "PortfolioMeasure: grids differ");
    require(as_of_ == other.as_of_ || other.cash_ == 0.0, "PortfolioMeasure: cash atoms at different times");
    for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] += a * other.weights_[i];
    cash_ += a * other.cash_;
    return *this;
}

double pair(const PortfolioMeasure& phi, std::span<const double> x) {
    require(x.size() == phi.weights().size(), "pair: curve size does not match grid");
    double acc = 0.0;
    const auto w = phi.weights();
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
    if (phi.cash() != 0.0) acc += phi.cash() * x[phi.grid()->require_node(phi.as_of())];
    return acc;
}

double pair(const PortfolioMeasure& phi, const BondCurve& p) {
    require(p.values.size() == phi.weights().size(), "pair: curve size does not match grid");
    double acc = phi.cash();
    const auto w = phi.weights();
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * p.values[i];
    return acc;
}

double pair(const PortfolioMeasure& phi, const DiscountedCurve& pt) {
    require(pt.values.size() == phi.weights().size(), "pair: curve size does not match grid");
    double acc = 0.0;
    const auto w = phi.weights();
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * pt.values[i];
    if (phi.cash() != 0.0) acc += phi.cash() * log_linear_at(*pt.grid, pt.values, pt.as_of);
    return acc;
}

double dual_norm(const PortfolioMeasure& phi) { return f1v_dual_norm(*phi.grid(), phi.weights()); }

}  // namespace hjm::curvespace
