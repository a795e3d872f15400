#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hjm/core/error.hpp"
#include "hjm/curvespace/curves.hpp"
#include "hjm/curvespace/grid.hpp"
#include "hjm/curvespace/portfolio.hpp"
#include "hjm/curvespace/sobolev.hpp"

using namespace hjm;
using namespace hjm::curvespace;

namespace {

GridPtr uniform_grid(double s_max, std::size_t intervals) {
    return make_grid(MaturityGrid::uniform(s_max, intervals));
}

// Composite Simpson on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

TEST_CASE("weight constants match closed forms") {
    const WeightConstants c = weight_constants(power_weight(2.0), power_weight(5.0));
    CHECK(std::abs(c.c_v - 1.0) < 1e-6);
    CHECK(std::abs(c.c_w - 1.0 / 3.0) < 1e-6);
    CHECK(std::abs(c.c_vw - 0.25) < 1e-6);
}

TEST_CASE("divergent weights are rejected") {
    CHECK_THROWS_AS(weight_constants(power_weight(1.0), power_weight(5.0)), PreconditionError);
    CHECK_THROWS_AS(weight_constants(power_weight(2.0), power_weight(3.0)), PreconditionError);
    CHECK_THROWS_AS(MaturityGrid::uniform(30.0, 30, power_weight(0.5)), PreconditionError);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(MaturityGrid({0.0, 1.0}, power_weight(2), power_weight(5)), PreconditionError);
    CHECK_THROWS_AS(MaturityGrid({0.5, 1.0, 2.0}, power_weight(2), power_weight(5)), PreconditionError);
    CHECK_THROWS_AS(MaturityGrid({0.0, 2.0, 1.0}, power_weight(2), power_weight(5)), PreconditionError);
    auto g = uniform_grid(10.0, 10);
    CHECK(g->require_node(5.0) == 5);
    CHECK_THROWS_AS(g->require_node(5.5), PreconditionError);
    CHECK(g->interval_of(5.5) == 5);
    CHECK(g->first_live_node(5.0) == 6);
}

TEST_CASE("bond prices from forward rates") {
    auto g = uniform_grid(10.0, 10);
    auto p = bonds_from_forwards(flat_forwards(g, 0.05), 0.0);
    CHECK(p.values[5] == doctest::Approx(std::exp(-0.25)).epsilon(1e-14));
    CHECK(p.values[0] == 1.0);
    for (std::size_t i = 1; i < p.values.size(); ++i) CHECK(p.values[i] <= p.values[i - 1]);

    auto zero = bonds_from_forwards(flat_forwards(g, 0.0), 0.0);
    for (double v : zero.values) CHECK(v == 1.0);

    CHECK_THROWS_AS(bonds_from_forwards(flat_forwards(g, 0.05), 11.0), PreconditionError);
}

TEST_CASE("piecewise-linear forwards integrate like a refined quadrature") {
    auto g = make_grid(MaturityGrid({0.0, 0.5, 1.0, 2.0, 3.5, 5.0, 7.0, 10.0}, power_weight(2), power_weight(5)));
    ForwardCurve f{g, {0.01, 0.015, 0.022, 0.03, 0.028, 0.035, 0.04, 0.041}, 0.0,
                   ForwardInterpolation::piecewise_linear};
    auto lin = [&](double s) {
        for (std::size_t j = 0; j + 1 < g->size(); ++j)
            if (s <= g->node(j + 1)) {
                const double th = (s - g->node(j)) / (g->node(j + 1) - g->node(j));
                return (1 - th) * f.values[j] + th * f.values[j + 1];
            }
        return f.values.back();
    };
    auto p = bonds_from_forwards(f, 0.0);
    for (std::size_t i = 1; i < g->size(); ++i) {
        // 10x refinement of each interval
        double integral = 0.0;
        for (std::size_t j = 0; j < i; ++j) integral += simpson(lin, g->node(j), g->node(j + 1), 10);
        CHECK(std::abs(p.values[i] - std::exp(-integral)) < 1e-6);
    }
    // off-node valuation time
    auto p2 = bonds_from_forwards(f, 1.5);
    const double ref = simpson(lin, 1.5, 2.0, 10) + simpson(lin, 2.0, 3.5, 10);
    CHECK(std::abs(p2.values[4] - std::exp(-ref)) < 1e-6);

    const double y = yield(f, 0.0, 10.0);
    double ref_int = 0.0;
    for (std::size_t j = 0; j + 1 < g->size(); ++j) ref_int += simpson(lin, g->node(j), g->node(j + 1), 20);
    CHECK(std::abs(y - ref_int / 10.0) < 1e-8);
}

TEST_CASE("forward rates from bond prices") {
    auto g = uniform_grid(20.0, 40);
    BondCurve p{g, std::vector<double>(g->size()), 0.0};
    for (std::size_t i = 0; i < g->size(); ++i) p.values[i] = std::exp(-0.05 * g->node(i));
    auto f = forwards_from_bonds(p);
    for (double v : f.values) CHECK(v == doctest::Approx(0.05).epsilon(1e-12));

    for (double& v : p.values) v = 1.0;
    for (double v : forwards_from_bonds(p).values) CHECK(v == 0.0);

    p.values[3] = 0.0;
    CHECK_THROWS_AS(forwards_from_bonds(p), PreconditionError);
}

TEST_CASE("forward/bond round trip is exact at nodes") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 0.08);
    auto g = make_grid(MaturityGrid({0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0},
                                    power_weight(2), power_weight(5)));
    for (int rep = 0; rep < 20; ++rep) {
        BondCurve p{g, std::vector<double>(g->size(), 1.0), 0.0};
        for (std::size_t i = 1; i < g->size(); ++i)
            p.values[i] = p.values[i - 1] * std::exp(-u(rng) * (g->node(i) - g->node(i - 1)));
        auto back = bonds_from_forwards(forwards_from_bonds(p), 0.0);
        for (std::size_t i = 0; i < g->size(); ++i) CHECK(std::abs(back.values[i] - p.values[i]) <= 1e-12);
    }
}

TEST_CASE("yields") {
    auto g = uniform_grid(10.0, 10);
    CHECK(yield(flat_forwards(g, 0.03), 0.0, 7.0) == doctest::Approx(0.03).epsilon(1e-14));
    ForwardCurve ramp{g, std::vector<double>(g->size()), 0.0, ForwardInterpolation::piecewise_linear};
    for (std::size_t i = 0; i < g->size(); ++i) ramp.values[i] = 0.004 * g->node(i);
    CHECK(yield(ramp, 0.0, 10.0) == doctest::Approx(0.02).epsilon(1e-14));
    CHECK_THROWS_AS(yield(ramp, 5.0, 5.0), PreconditionError);
}

TEST_CASE("numeraire split") {
    auto g = uniform_grid(10.0, 10);
    auto d0 = initial_discounted_curve(flat_forwards(g, 0.04));
    auto s0 = split_numeraire(d0);
    CHECK(s0.bank_account == 1.0);
    for (std::size_t i = 0; i < g->size(); ++i) CHECK(s0.bonds.values[i] == d0.values[i]);

    DiscountedCurve c{g, std::vector<double>(g->size(), 0.7), 2.5};
    auto sc = split_numeraire(c);
    CHECK(sc.bank_account == doctest::Approx(1.0 / 0.7).epsilon(1e-14));
    for (std::size_t i = 3; i < g->size(); ++i) CHECK(sc.bonds.values[i] == doctest::Approx(1.0).epsilon(1e-14));

    // node valuation time gives P_t(t) = 1 exactly
    DiscountedCurve d{g, d0.values, 3.0};
    CHECK(split_numeraire(d).bonds.values[3] == 1.0);

    c.values[2] = -0.1;
    CHECK_THROWS_AS(split_numeraire(c), PreconditionError);
}

TEST_CASE("Sobolev norms") {
    auto g = uniform_grid(40.0, 4000);
    std::vector<double> x(g->size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::exp(-g->node(i));
    // int_0^inf e^{-2s} (1+s)^2 ds = 1/2 + 1/2 + 1/4
    const double n1 = f1v_norm(*g, x);
    CHECK(std::abs(n1 - std::sqrt(1.25)) / std::sqrt(1.25) < 0.01);
    // int_0^inf e^{-2s} (1+s)^5 ds by quadrature
    const double ref2 = simpson([](double s) { return std::exp(-2 * s) * std::pow(1 + s, 5); }, 0.0, 60.0, 6000);
    CHECK(std::abs(f2w_norm(*g, x) - std::sqrt(ref2)) / std::sqrt(ref2) < 0.01);

    std::vector<double> zero(g->size(), 0.0);
    CHECK(f1v_norm(*g, zero) == 0.0);
    CHECK(f2w_norm(*g, zero) == 0.0);

    std::vector<double> scaled(x);
    for (double& v : scaled) v *= -3.5;
    CHECK(f1v_norm(*g, scaled) == doctest::Approx(3.5 * n1).epsilon(1e-14));
    CHECK(sobolev_norm(*g, scaled, Space::f2w) == doctest::Approx(3.5 * f2w_norm(*g, x)).epsilon(1e-14));

    // a nonzero constant curve has positive norm because of the ghost zeros
    std::vector<double> one(g->size(), 1.0);
    CHECK(f1v_norm(*g, one) > 0.0);
    CHECK(f2w_norm(*g, one) > 0.0);
}

TEST_CASE("evaluation and embedding bounds on random curves") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (std::size_t intervals : {30u, 120u}) {
        auto g = uniform_grid(30.0, intervals);
        const auto& c = g->constants();
        double worst_eval = 0.0;
        double worst_embed = 0.0;
        for (int rep = 0; rep < 200; ++rep) {
            // smooth random curve: a few decaying modes
            const double a = nd(rng), b = nd(rng), k = 0.05 + std::abs(nd(rng)) * 0.3, w = std::abs(nd(rng));
            std::vector<double> x(g->size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double s = g->node(i);
                x[i] = (a + b * std::cos(w * s)) * std::exp(-k * s);
            }
            const double n1 = f1v_norm(*g, x);
            for (double v : x) worst_eval = std::max(worst_eval, std::abs(v) / n1);
            worst_embed = std::max(worst_embed, n1 / f2w_norm(*g, x));
        }
        CHECK(worst_eval <= std::sqrt(c.c_v) * (1.0 + 1e-9));
        CHECK(worst_embed <= std::sqrt(c.c_vw) + 0.05);
    }
}

TEST_CASE("derivative functional dual norm grows under refinement") {
    double prev = 0.0;
    for (std::size_t intervals : {30u, 60u, 120u, 240u, 480u}) {
        auto g = uniform_grid(30.0, intervals);
        const double n = derivative_dual_norm(*g, 1.0);
        CHECK(n > prev);
        CHECK(n == doctest::Approx(1.0 / std::sqrt(g->v()(1.0 + 0.5 * g->widths()[0]) * g->widths()[0])).epsilon(1e-12));
        prev = n;
    }
    // delta_s has a bounded dual norm by contrast
    auto g = uniform_grid(30.0, 480);
    std::vector<double> c(g->size(), 0.0);
    c[g->require_node(1.0)] = 1.0;
    CHECK(f1v_dual_norm(*g, c) <= std::sqrt(g->constants().c_v));
}

TEST_CASE("pairing with portfolio measures") {
    auto g = uniform_grid(10.0, 10);
    std::vector<double> x(g->size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + 0.1 * i;
    auto d5 = PortfolioMeasure::from_atoms(g, {{5.0, 1.0}});
    CHECK(pair(d5, x) == x[5]);
    auto call = PortfolioMeasure::from_atoms(g, {{7.0, 1.0}, {5.0, -0.9}});
    CHECK(pair(call, x) == doctest::Approx(x[7] - 0.9 * x[5]).epsilon(1e-15));
    CHECK(pair(PortfolioMeasure(g), x) == 0.0);
    auto support = call.support_interval();
    REQUIRE(support.has_value());
    CHECK(support->first == 5.0);
    CHECK(support->second == 7.0);
    CHECK_FALSE(PortfolioMeasure(g).support_interval().has_value());
    CHECK_THROWS_AS(PortfolioMeasure::from_atoms(g, {{5.5, 1.0}}), PreconditionError);

    PortfolioMeasure cash(g, 2.0);
    cash.set_cash(3.0);
    BondCurve p{g, x, 2.0};
    CHECK(pair(cash, p) == 3.0);
}
