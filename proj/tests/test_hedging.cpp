#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "hjm/core/error.hpp"
#include "hjm/curvespace/portfolio.hpp"
#include "hjm/hedging/gaussian.hpp"
#include "hjm/hedging/payout.hpp"
#include "hjm/hedging/strategy.hpp"

using namespace hjm;
using namespace hjm::hedging;
using curvespace::PortfolioMeasure;

namespace {

struct Setup {
    curvespace::GridPtr grid = fixtures::yearly_grid();
    std::vector<double> x0 = fixtures::flat_discounted(grid, 0.05);
    double strike() const { return x0[7] / x0[5]; }
};

std::shared_ptr<dynamics::GaussianHjm> frozen(const curvespace::GridPtr& g) { return fixtures::ho_lee(g, 0.0); }

HedgeConfig hedge_config(double horizon, std::size_t steps, std::size_t paths, std::uint64_t seed) {
    HedgeConfig c;
    c.sim.time = dynamics::TimeGrid::uniform(horizon, steps);
    c.sim.paths = paths;
    c.sim.seed = seed;
    return c;
}

Payout smooth_basket() {
    auto g = [](std::span<const double> b) { return std::log(1.0 + b[0] * b[0]) + 0.5 * b[0] * b[1]; };
    auto dg = [](std::span<const double> b, std::span<double> out) {
        out[0] = 2.0 * b[0] / (1.0 + b[0] * b[0]) + 0.5 * b[1];
        out[1] = 0.5 * b[0];
    };
    return Payout::basket(5.0, {7.0, 10.0}, g, dg, 3.0);
}

}  // namespace

TEST_CASE("modified call payout") {
    Setup s;
    BoundPayout call(Payout::zcb_call(5.0, 7.0, 0.85), s.grid);
    std::vector<double> x(s.grid->size(), 1.0);
    x[5] = 0.9;
    x[7] = 0.8;
    CHECK(modified_payout(call, x) == doctest::Approx(0.035).epsilon(1e-14));
    CHECK(call.value(x) == doctest::Approx(0.035).epsilon(1e-14));

    auto lifted = x;
    for (double& v : lifted) v *= 1.7;
    CHECK(modified_payout(call, lifted) == doctest::Approx(1.7 * 0.035).epsilon(1e-14));

    x[7] = 0.7;
    CHECK(modified_payout(call, x) == 0.0);

    x[5] = 0.0;
    CHECK_THROWS_AS(modified_payout(call, x), PreconditionError);
    CHECK_THROWS_AS(BoundPayout(Payout::zcb_call(5.0, 5.0, 0.9), s.grid), PreconditionError);
    CHECK_THROWS_AS(BoundPayout(Payout::zcb_call(5.0, 7.5, 0.9), s.grid), PreconditionError);
}

TEST_CASE("arrears payout") {
    Setup s;
    const double k = 0.9;
    BoundPayout spot(Payout::zcb_call(5.0, 7.0, k), s.grid);
    BoundPayout late(Payout::zcb_call(5.0, 7.0, k, 3.0), s.grid);
    auto x = s.x0;
    x[7] *= 1.05;

    const ArrearsValue a0 = arrears_payout(spot, x);
    CHECK(a0.value == doctest::Approx(modified_payout(spot, x)).epsilon(1e-15));
    CHECK(a0.carry_maturity == 5.0);

    const ArrearsValue a = arrears_payout(late, x);
    const double ratio = std::max(x[7] / x[5] - k, 0.0);
    CHECK(ratio > 0.0);
    CHECK(a.value == doctest::Approx(x[8] * ratio).epsilon(1e-14));
    CHECK(a.carry_units == doctest::Approx(ratio).epsilon(1e-14));
    CHECK(a.carry_maturity == 8.0);
    CHECK_THROWS_AS(BoundPayout(Payout::zcb_call(5.0, 7.0, k, 26.0), s.grid), PreconditionError);
}

TEST_CASE("call subgradient") {
    Setup s;
    const double k = 0.85;
    BoundPayout call(Payout::zcb_call(5.0, 7.0, k), s.grid);
    std::vector<double> x(s.grid->size(), 1.0);
    x[5] = 0.9;
    x[7] = 0.8;

    auto itm = call.subgradient(x);
    CHECK(itm.weight(7) == 1.0);
    CHECK(itm.weight(5) == doctest::Approx(-k).epsilon(1e-15));
    CHECK(itm.atoms().size() == 2);

    x[7] = 0.7;
    CHECK(call.subgradient(x).atoms().empty());

    x[7] = k * x[5];  // on the kink
    CHECK(call.subgradient(x).atoms().empty());

    x[7] = 0.8;
    CHECK(curvespace::dual_norm(itm) <= call.payout().lipschitz);
}

TEST_CASE("basket subgradient matches central differences") {
    Setup s;
    BoundPayout basket(smooth_basket(), s.grid);
    auto x = s.x0;
    const std::size_t n = x.size();
    for (std::size_t dir = 0; dir < 3; ++dir) {
        std::vector<double> h(n);
        for (std::size_t i = 0; i < n; ++i) h[i] = std::cos(0.7 * static_cast<double>(i * (dir + 1)));
        const double eps = 1e-5;
        auto up = x, dn = x;
        for (std::size_t i = 0; i < n; ++i) {
            up[i] += eps * h[i];
            dn[i] -= eps * h[i];
        }
        const double fd = (modified_payout(basket, up) - modified_payout(basket, dn)) / (2.0 * eps);
        const double exact = curvespace::pair(basket.subgradient(x), h);
        CHECK(std::abs(exact - fd) <= 1e-4 * std::abs(fd));
    }
}

TEST_CASE("sampled Lipschitz constant stays below the declared one") {
    Setup s;
    BoundPayout call(Payout::zcb_call(5.0, 7.0, s.strike()), s.grid);
    const double c = sampled_lipschitz(call, s.x0, 400, 3);
    CHECK(c > 0.0);
    CHECK(c <= call.payout().lipschitz);
    BoundPayout basket(smooth_basket(), s.grid);
    CHECK(sampled_lipschitz(basket, s.x0, 400, 4) <= basket.payout().lipschitz);
}

TEST_CASE("self-financing completion") {
    Setup s;
    curvespace::BondCurve p{s.grid, std::vector<double>(s.grid->size()), 2.0};
    for (std::size_t i = 0; i < p.values.size(); ++i)
        p.values[i] = std::exp(-0.04 * std::max(s.grid->node(i) - 2.0, 0.0));

    PortfolioMeasure phi(s.grid, 2.0);
    phi.weight(5) = 0.7;
    phi.weight(12) = -0.3;
    const double matched = curvespace::pair(phi, p);
    auto same = self_financing_complete(phi, matched, p);
    CHECK(same.cash() == 0.0);
    CHECK(same.weight(5) == 0.7);

    auto cash = self_financing_complete(PortfolioMeasure(s.grid, 2.0), 0.42, p);
    CHECK(cash.atoms().empty());
    CHECK(cash.cash() == 0.42);

    for (double v : {-1.3, 0.0, 0.123456789, 17.0}) {
        auto vp = self_financing_complete(phi, v, p);
        CHECK(std::abs(curvespace::pair(vp, p) - v) <= 1e-14);
    }

    curvespace::DiscountedCurve d{s.grid, s.x0, 2.0};
    for (double v : {0.3, 0.9}) {
        auto vp = self_financing_complete(phi, v, d);
        CHECK(std::abs(curvespace::pair(vp, d) - v) <= 1e-14);
    }
}

TEST_CASE("prehedge without volatility is the subgradient") {
    Setup s;
    auto model = frozen(s.grid);
    const double k = 0.9 * s.strike();
    BoundPayout call(Payout::zcb_call(5.0, 7.0, k), s.grid);
    malliavin::NestedConfig nc;
    nc.inner_paths = 8;
    const auto time = dynamics::TimeGrid::uniform(5.0, 10);
    const Prehedge ph = prehedge(*model, dynamics::Scheme::log_euler, call, time, 0, s.x0, nc);
    CHECK(ph.phi.weight(7) == 1.0);
    CHECK(ph.phi.weight(5) == doctest::Approx(-k).epsilon(1e-14));
    CHECK(ph.phi.atoms().size() == 2);
    CHECK(ph.se[7] == 0.0);
    CHECK(ph.value.mean == doctest::Approx(modified_payout(call, s.x0)).epsilon(1e-14));

    std::vector<WeightSlice> slices(1);
    slices[0].phi = ph.phi;
    slices[0].se = ph.se;
    CHECK(support_check(slices, 7.0).pass);
    auto iv = ph.phi.support_interval();
    REQUIRE(iv);
    CHECK(iv->first == 5.0);
    CHECK(iv->second == 7.0);
}

TEST_CASE("Ho-Lee prehedge matches the closed form") {
    Setup s;
    auto model = fixtures::ho_lee(s.grid, 0.01);
    BoundPayout call(Payout::zcb_call(5.0, 7.0, s.strike()), s.grid);
    malliavin::NestedConfig nc;
    nc.inner_paths = 4000;
    nc.seed = 11;
    const auto time = dynamics::TimeGrid::uniform(5.0, 50);
    const Prehedge ph = prehedge(*model, dynamics::Scheme::euler, call, time, 0, s.x0, nc);
    const GaussianCall cf = gaussian_zcb_call(*model, call, 0.0, s.x0);
    CHECK(cf.weight_maturity == doctest::Approx(normal_cdf(cf.d1)));
    CHECK(std::abs(ph.phi.weight(7) - cf.weight_maturity) <= 3.0 * ph.se[7]);
    CHECK(std::abs(ph.phi.weight(5) - cf.weight_expiry) <= 3.0 * ph.se[5]);
    CHECK(std::abs(ph.value.mean - cf.price) <= 3.0 * ph.value.se);
    CHECK(ph.dual_norm <= ph.dual_bound);
    for (std::size_t i = 0; i < s.x0.size(); ++i)
        if (i != 5 && i != 7) CHECK(ph.phi.weight(i) == 0.0);
}

TEST_CASE("local-model prehedge carries no weight beyond the longest underlying") {
    auto grid = curvespace::make_grid(curvespace::MaturityGrid::uniform(12.0, 12));
    auto x0 = fixtures::flat_discounted(grid, 0.05);
    auto model = fixtures::local(grid, 6);
    BoundPayout call(Payout::zcb_call(5.0, 7.0, x0[7] / x0[5]), grid);
    malliavin::NestedConfig nc;
    nc.inner_paths = 256;
    nc.seed = 5;
    const auto time = dynamics::TimeGrid::uniform(5.0, 16);
    const Prehedge ph = prehedge(*model, dynamics::Scheme::log_euler, call, time, 0, x0, nc);
    std::vector<WeightSlice> slices(1);
    slices[0].phi = ph.phi;
    slices[0].se = ph.se;
    const auto verdict = support_check(slices, 7.0);
    CHECK(verdict.pass);
    CHECK(verdict.violations == 0);
    // weight does reach short maturities
    double inside = 0.0;
    for (std::size_t i = 1; i < 5; ++i) inside += std::abs(ph.phi.weight(i));
    CHECK(inside > 0.0);
    const double rel = ph.se[7] / std::max(std::abs(ph.phi.weight(7)), 1e-12);
    CHECK(ph.dual_norm <= ph.dual_bound * (1.0 + 3.0 * rel));
}

TEST_CASE("support check verdicts") {
    Setup s;
    std::vector<WeightSlice> slices(2);
    for (auto& sl : slices) {
        sl.phi = PortfolioMeasure(s.grid, 0.0);
        sl.se.assign(s.grid->size(), 0.01);
        sl.phi.weight(7) = 0.5;
        sl.phi.set_cash(3.0);
    }
    slices[1].t = 1.0;
    slices[1].phi.weight(9) = 0.02;
    auto pass = support_check(slices, 9.0);
    CHECK(pass.pass);
    auto quiet = support_check(slices, 7.0);
    CHECK(quiet.pass);  // 0.02 is within 3 s.e.
    slices[1].phi.weight(9) = 0.2;
    auto loud = support_check(slices, 7.0);
    CHECK_FALSE(loud.pass);
    CHECK(loud.violations == 1);
    CHECK(loud.worst_maturity == 9.0);
    CHECK(loud.worst_time == 1.0);
    CHECK(loud.worst_weight == doctest::Approx(0.2));

    slices[1].se.assign(s.grid->size(), 0.0);
    slices[1].phi.weight(9) = 5e-7;
    CHECK(support_check(slices, 7.0).pass);
    slices[1].phi.weight(9) = 2e-6;
    CHECK_FALSE(support_check(slices, 7.0).pass);
}

TEST_CASE("finite-factor hedge of a bond is the bond") {
    Setup s;
    auto model = fixtures::three_factor(s.grid);
    BoundPayout bond(Payout::bond(5.0, 7.0), s.grid);
    auto c = hedge_config(5.0, 100, 20, 2);
    c.record_paths = 2;
    const std::vector<double> mats{7.0, 15.0, 20.0};
    const HedgeReport r = finite_factor_hedge(*model, bond, s.x0, mats, c);
    CHECK(r.price == doctest::Approx(s.x0[7]).epsilon(1e-15));
    REQUIRE(!r.slices.empty());
    for (const auto& sl : r.slices) {
        CHECK(sl.phi.weight(7) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(sl.phi.weight(15)) <= 1e-10);
        CHECK(std::abs(sl.phi.weight(20)) <= 1e-10);
    }
    CHECK(r.error.max_abs <= 1e-12);

    const HedgeReport rr = replicate(*model, bond, s.x0, c);
    CHECK(rr.error.max_abs <= 1e-15);
    auto local_model = fixtures::local(s.grid, 4);
    const HedgeReport lr = replicate(*local_model, bond, s.x0, c);
    CHECK(lr.method == "prehedge_closed_form");
    CHECK(lr.error.max_abs <= 1e-15);
}

TEST_CASE("finite-factor hedge refuses a singular system") {
    Setup s;
    auto model = fixtures::three_factor(s.grid);
    BoundPayout call(Payout::zcb_call(5.0, 7.0, s.strike()), s.grid);
    const auto c = hedge_config(5.0, 10, 2, 1);
    const std::vector<double> repeated{15.0, 15.0, 20.0};
    CHECK_THROWS_AS(finite_factor_hedge(*model, call, s.x0, repeated, c), PreconditionError);
    const std::vector<double> early{4.0, 15.0, 20.0};
    CHECK_THROWS_AS(finite_factor_hedge(*model, call, s.x0, early, c), PreconditionError);
    const std::vector<double> short_list{15.0, 20.0};
    CHECK_THROWS_AS(finite_factor_hedge(*model, call, s.x0, short_list, c), PreconditionError);
}

TEST_CASE("Ho-Lee call hedged with a ten-year bond") {
    Setup s;
    auto model = fixtures::ho_lee(s.grid, 0.01);
    BoundPayout call(Payout::zcb_call(5.0, 7.0, s.strike()), s.grid);
    const std::vector<double> mats{10.0};
    const HedgeReport r = finite_factor_hedge(*model, call, s.x0, mats, hedge_config(5.0, 2500, 200, 9));
    CHECK(r.error.relative_rms <= 0.02);
    CHECK(std::abs(r.slices[0].phi.weight(10)) > 0.1);
    CHECK(r.slices[0].phi.weight(7) == 0.0);
}

TEST_CASE("replication without volatility is exact") {
    Setup s;
    auto model = frozen(s.grid);
    BoundPayout call(Payout::zcb_call(5.0, 7.0, 0.95 * s.strike()), s.grid);
    const HedgeReport r = replicate(*model, call, s.x0, hedge_config(5.0, 20, 4, 1));
    CHECK(r.method == "prehedge_closed_form");
    CHECK(r.error.max_abs <= 1e-15);
    CHECK(r.price == doctest::Approx(modified_payout(call, s.x0)).epsilon(1e-14));
    REQUIRE(r.support);
    CHECK(r.support->pass);

    auto c = hedge_config(5.0, 10, 2, 1);
    c.analytic = false;
    c.inner_paths = 4;
    c.price_paths = 4;
    const HedgeReport n = replicate(*model, call, s.x0, c);
    CHECK(n.method == "prehedge_nested");
    CHECK(n.error.max_abs <= 1e-15);
}

TEST_CASE("arrears claim carried in the settlement bond") {
    Setup s;
    auto model = frozen(s.grid);
    BoundPayout late(Payout::zcb_call(5.0, 7.0, 0.95 * s.strike(), 2.0), s.grid);
    auto c = hedge_config(7.0, 14, 2, 1);
    c.inner_paths = 4;
    c.price_paths = 4;
    const HedgeReport r = replicate(*model, late, s.x0, c);
    CHECK(r.error.max_abs <= 1e-14);
    CHECK(r.price == doctest::Approx(arrears_payout(late, s.x0).value).epsilon(1e-13));
}

TEST_CASE("Ho-Lee replication error halves at rate one half") {
    Setup s;
    auto model = fixtures::ho_lee(s.grid, 0.01);
    BoundPayout call(Payout::zcb_call(5.0, 7.0, s.strike()), s.grid);
    auto coarse = hedge_config(5.0, 100, 2000, 4);
    auto fine = hedge_config(5.0, 200, 2000, 4);
    fine.sim.refine = 1;
    const double e1 = replicate(*model, call, s.x0, coarse).error.relative_rms;
    const double e2 = replicate(*model, call, s.x0, fine).error.relative_rms;
    CHECK(e1 / e2 >= 1.25);
    CHECK(e1 / e2 <= 1.6);
}

TEST_CASE("price matches the Gaussian closed form") {
    Setup s;
    auto model = fixtures::ho_lee(s.grid, 0.01);
    BoundPayout call(Payout::zcb_call(5.0, 7.0, s.strike()), s.grid);
    dynamics::SimulationConfig sim;
    sim.time = dynamics::TimeGrid::uniform(5.0, 50);
    sim.paths = 20000;
    sim.seed = 8;
    sim.antithetic = true;
    const auto mc = price(*model, call, s.x0, sim);
    CHECK(std::abs(mc.mean - gaussian_zcb_call(*model, call, 0.0, s.x0).price) <= 3.0 * mc.se);
    sim.time = dynamics::TimeGrid::uniform(6.0, 50);
    CHECK_THROWS_AS(price(*model, call, s.x0, sim), PreconditionError);
}

TEST_CASE("bump and revalue") {
    Setup s;
    BoundPayout call(Payout::zcb_call(5.0, 7.0, 0.9 * s.strike()), s.grid);
    dynamics::SimulationConfig sim;
    sim.time = dynamics::TimeGrid::uniform(5.0, 20);
    sim.paths = 8;
    std::vector<double> h(s.x0.size(), 0.0);

    auto zero = frozen(s.grid);
    CHECK(bump_revalue(*zero, call, s.x0, h, 1e-4, sim).value == 0.0);
    h[7] = 1.0;
    CHECK(bump_revalue(*zero, call, s.x0, h, 1e-4, sim).value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(bump_revalue(*zero, call, s.x0, h, 0.0, sim), PreconditionError);

    auto model = fixtures::ho_lee(s.grid, 0.01);
    sim.paths = 20000;
    sim.seed = 6;
    sim.antithetic = true;
    const auto d = bump_revalue(*model, call, s.x0, h, 1e-4, sim);
    const GaussianCall cf = gaussian_zcb_call(*model, call, 0.0, s.x0);
    CHECK(std::abs(d.value - cf.weight_maturity) <= 3.0 * d.se);
}

TEST_CASE("uniqueness gap") {
    Setup s;
    auto model = fixtures::ho_lee(s.grid, 0.01);
    BoundPayout call(Payout::zcb_call(5.0, 7.0, s.strike()), s.grid);
    dynamics::SimulationConfig sim;
    sim.time = dynamics::TimeGrid::uniform(5.0, 50);
    sim.paths = 4000;
    sim.seed = 21;
    sim.antithetic = true;
    malliavin::NestedConfig nc;
    nc.inner_paths = 4000;
    nc.seed = 22;
    const Prehedge a = prehedge(*model, dynamics::Scheme::euler, call, sim.time, 0, s.x0, nc);
    const Prehedge b = bump_revalue_strategy(*model, call, s.x0, 1e-4, sim);

    StrategyPair same{0.0, s.x0, 1.0, a.phi, a.phi, a.se, a.se};
    const UniquenessGap g0 = uniqueness_gap(*model, {same});
    CHECK(g0.max_dual_gap == 0.0);
    CHECK(g0.sigma_gap == 0.0);
    CHECK(g0.pass);

    StrategyPair pair{0.0, s.x0, 1.0, a.phi, b.phi, a.se, b.se};
    CHECK(uniqueness_gap(*model, {pair}).pass);

    pair.b.weight(10) += 0.1;
    const UniquenessGap bad = uniqueness_gap(*model, {pair});
    CHECK_FALSE(bad.pass);
    CHECK(bad.max_dual_gap > bad.dual_threshold);
}

TEST_CASE("budget guard") {
    Setup s;
    auto model = fixtures::local(s.grid, 4);
    BoundPayout call(Payout::zcb_call(5.0, 7.0, s.strike()), s.grid);
    auto c = hedge_config(5.0, 64, 64, 1);
    c.budget_cap = 1e6;
    const double cost = replication_cost(*model, c, true);
    CHECK(cost > c.budget_cap);
    CHECK(replication_cost(*model, c, false) < cost);
    try {
        replicate(*model, call, s.x0, c);
        FAIL("expected a budget error");
    } catch (const BudgetError& e) {
        CHECK(e.estimated_cost() == doctest::Approx(cost));
    }
}
