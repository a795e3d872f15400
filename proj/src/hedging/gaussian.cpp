#include "hjm/hedging/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hjm/core/error.hpp"
#include "hjm/curvespace/quadrature.hpp"

namespace hjm::hedging {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gaussian_call_variance(const dynamics::GaussianHjm& model, double t, double expiry, double maturity) {
    require(t <= expiry && expiry < maturity, "gaussian call: need t <= T < T_1");
    if (t == expiry) return 0.0;
    auto integrand = [&](double u) {
        double acc = 0.0;
        for (const auto& tau : model.taus()) {
            const double d = tau.integral(u, maturity) - tau.integral(u, expiry);
            acc += d * d;
        }
        return acc;
    };
    // piecewise specs are smooth between breaks; split there for the quadrature
    std::vector<double> cuts{t, expiry};
    for (const auto& tau : model.taus())
        for (double b : tau.breaks)
            if (b > t && b < expiry) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j)
        if (cuts[j + 1] > cuts[j]) total += curvespace::integrate(integrand, cuts[j], cuts[j + 1], 1e-13);
    return total;
}

GaussianCall gaussian_zcb_call(const dynamics::GaussianHjm& model, double t, double x_expiry, double x_maturity,
                               double expiry, double maturity, double strike) {
    return black_zcb_call(std::sqrt(gaussian_call_variance(model, t, expiry, maturity)), x_expiry, x_maturity,
                          strike);
}

GaussianCall black_zcb_call(double total_vol, double x_expiry, double x_maturity, double strike) {
    require(x_expiry > 0.0 && x_maturity > 0.0, "gaussian call: bond prices must be positive");
    require(strike > 0.0, "gaussian call: strike must be positive");
    GaussianCall c;
    c.total_vol = total_vol;
    const double fwd = x_maturity / (strike * x_expiry);
    if (c.total_vol < 1e-300) {
        const bool itm = fwd > 1.0;
        c.weight_maturity = itm ? 1.0 : 0.0;
        c.weight_expiry = itm ? -strike : 0.0;
        c.d1 = c.d2 = itm ? INFINITY : -INFINITY;
        c.price = std::max(x_maturity - strike * x_expiry, 0.0);
        return c;
    }
    c.d1 = (std::log(fwd) + 0.5 * c.total_vol * c.total_vol) / c.total_vol;
    c.d2 = c.d1 - c.total_vol;
    c.weight_maturity = normal_cdf(c.d1);
    c.weight_expiry = -strike * normal_cdf(c.d2);
    c.price = x_maturity * c.weight_maturity + x_expiry * c.weight_expiry;
    return c;
}

GaussianCall gaussian_zcb_call(const dynamics::GaussianHjm& model, const BoundPayout& payout, double t,
                               std::span<const double> x) {
    require(payout.payout().kind == "zcb_call" && payout.payout().arrears == 0.0,
            "gaussian closed form needs a spot-settled zcb_call");
    const Payout& p = payout.payout();
    return gaussian_zcb_call(model, t, x[payout.expiry_node()], x[payout.underlying_nodes()[0]], p.expiry,
                             p.maturities[0], p.strike);
}

curvespace::PortfolioMeasure gaussian_prehedge(const dynamics::GaussianHjm& model, const BoundPayout& payout,
                                               double t, std::span<const double> x) {
    const Payout& p = payout.payout();
    return gaussian_prehedge(payout, t, x, std::sqrt(gaussian_call_variance(model, t, p.expiry, p.maturities[0])));
}

curvespace::PortfolioMeasure gaussian_prehedge(const BoundPayout& payout, double t, std::span<const double> x,
                                               double total_vol) {
    const Payout& p = payout.payout();
    require(p.kind == "zcb_call" && p.arrears == 0.0, "gaussian closed form needs a spot-settled zcb_call");
    const GaussianCall c = black_zcb_call(total_vol, x[payout.expiry_node()], x[payout.underlying_nodes()[0]], p.strike);
    curvespace::PortfolioMeasure m(payout.grid(), t);
    m.weight(payout.underlying_nodes()[0]) += c.weight_maturity;
    m.weight(payout.expiry_node()) += c.weight_expiry;
    return m;
}

bool is_bond_claim(const BoundPayout& payout) {
    return payout.payout().kind == "bond" && payout.payout().arrears == 0.0;
}

bool has_gaussian_oracle(const dynamics::VolatilityModel& model, const BoundPayout& payout) {
    return dynamic_cast<const dynamics::GaussianHjm*>(&model) != nullptr && payout.payout().kind == "zcb_call" &&
           payout.payout().arrears == 0.0 && payout.payout().strike > 0.0;
}

}  // namespace hjm::hedging
