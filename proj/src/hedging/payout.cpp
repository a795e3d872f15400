#include "hjm/hedging/payout.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hjm/core/error.hpp"
#include "hjm/curvespace/sobolev.hpp"
#include "hjm/dynamics/diagnostics.hpp"

namespace hjm::hedging {

Payout Payout::zcb_call(double expiry, double maturity, double strike, double arrears) {
    require(strike >= 0.0, "zcb_call: strike must be non-negative");
    Payout p;
    p.kind = "zcb_call";
    std::ostringstream label;
    label << "call(T=" << expiry << ", T1=" << maturity << ", K=" << strike << ")";
    p.label = label.str();
    p.expiry = expiry;
    p.maturities = {maturity};
    p.arrears = arrears;
    p.strike = strike;
    p.lipschitz = 1.0 + strike;
    p.g = [strike](std::span<const double> b) { return std::max(b[0] - strike, 0.0); };
    // right-continuous convention at the kink
    p.dg = [strike](std::span<const double> b, std::span<double> out) { out[0] = b[0] > strike ? 1.0 : 0.0; };
    return p;
}

Payout Payout::bond(double expiry, double maturity) {
    Payout p;
    p.kind = "bond";
    std::ostringstream label;
    label << "bond(T=" << expiry << ", T1=" << maturity << ")";
    p.label = label.str();
    p.expiry = expiry;
    p.maturities = {maturity};
    p.lipschitz = 1.0;
    p.g = [](std::span<const double> b) { return b[0]; };
    p.dg = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    return p;
}

Payout Payout::basket(double expiry, std::vector<double> maturities, Fn g, Grad dg, double lipschitz,
                      std::string label) {
    require(g && dg, "basket payout needs g and its gradient");
    Payout p;
    p.kind = "basket";
    p.label = std::move(label);
    p.expiry = expiry;
    p.maturities = std::move(maturities);
    p.lipschitz = lipschitz;
    p.g = std::move(g);
    p.dg = std::move(dg);
    return p;
}

double Payout::longest_underlying() const { return *std::max_element(maturities.begin(), maturities.end()); }

BoundPayout::BoundPayout(Payout payout, curvespace::GridPtr grid) : payout_(std::move(payout)), grid_(std::move(grid)) {
    const Payout& p = payout_;
    require(!p.maturities.empty(), "payout: no underlying maturities");
    require(p.expiry > 0.0, "payout: expiry must be positive");
    require(p.arrears >= 0.0, "payout: arrears offset must be non-negative");
    for (std::size_t i = 0; i < p.maturities.size(); ++i) {
        require(p.maturities[i] > p.expiry, "payout: underlying maturities must exceed the expiry");
        if (i > 0) require(p.maturities[i] >= p.maturities[i - 1], "payout: maturities must be sorted");
    }
    require(p.longest_underlying() <= grid_->last() + 1e-9, "payout: underlying beyond the maturity grid");
    require(p.settlement() <= grid_->last() + 1e-9, "payout: settlement beyond the maturity grid");
    expiry_node_ = grid_->require_node(p.expiry);
    settle_node_ = grid_->require_node(p.settlement());
    for (double m : p.maturities) nodes_.push_back(grid_->require_node(m));
}

void BoundPayout::ratios(std::span<const double> x, std::span<double> out) const {
    require(x.size() == grid_->size(), "payout: curve does not match grid");
    const double xt = x[expiry_node_];
    require(xt > 0.0, "payout: x(T) must be positive");
    for (std::size_t i = 0; i < nodes_.size(); ++i) out[i] = x[nodes_[i]] / xt;
}

double BoundPayout::payoff(std::span<const double> x) const {
    std::vector<double> r(nodes_.size());
    ratios(x, r);
    return payout_.g(r);
}

double BoundPayout::value(std::span<const double> x) const { return x[settle_node_] * payoff(x); }

void BoundPayout::gradient(std::span<const double> x, std::span<double> out) const {
    const std::size_t n = nodes_.size();
    std::vector<double> r(n), dg(n);
    ratios(x, r);
    payout_.dg(r, dg);
    const double g = payout_.g(r);
    const double xt = x[expiry_node_];
    const double xs = x[settle_node_];
    std::fill(out.begin(), out.end(), 0.0);
    double dt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[nodes_[i]] += xs * dg[i] / xt;
        dt -= xs * dg[i] * r[i] / xt;
    }
    out[expiry_node_] += dt;
    out[settle_node_] += g;
}

curvespace::PortfolioMeasure BoundPayout::subgradient(std::span<const double> x, double as_of) const {
    curvespace::PortfolioMeasure m(grid_, as_of);
    gradient(x, m.weights());
    return m;
}

double modified_payout(const BoundPayout& payout, std::span<const double> x) {
    const std::size_t t = payout.expiry_node();
    return x[t] * payout.payoff(x);
}

ArrearsValue arrears_payout(const BoundPayout& payout, std::span<const double> x) {
    ArrearsValue out;
    out.carry_units = payout.payoff(x);
    out.value = x[payout.settlement_node()] * out.carry_units;
    out.carry_maturity = payout.payout().settlement();
    return out;
}

double sampled_lipschitz(const BoundPayout& payout, std::span<const double> x0, std::size_t pairs,
                         std::uint64_t seed) {
    const auto& g = *payout.grid();
    auto states = dynamics::sample_states(g, x0, 2 * pairs, seed, 0.1);
    std::vector<double> d(g.size());
    double worst = 0.0;
    auto probe = [&](const std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
        const double norm = curvespace::f1v_norm(g, d);
        if (norm > 0.0) worst = std::max(worst, std::abs(payout.value(a) - payout.value(b)) / norm);
    };
    for (std::size_t p = 0; p < pairs; ++p) probe(states[2 * p], states[2 * p + 1]);
    // single-node moves of the underlyings, where kinked payouts are steepest
    for (std::size_t p = 0; p < pairs; ++p) {
        auto a = states[p];
        auto b = a;
        const std::size_t node = payout.underlying_nodes()[p % payout.underlying_nodes().size()];
        b[node] *= 1.0 + 0.05 * (1.0 + static_cast<double>(p % 3));
        probe(a, b);
    }
    return worst;
}

}  // namespace hjm::hedging
