#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "hjm/core/error.hpp"
#include "hjm/curvespace/sobolev.hpp"
#include "hjm/dynamics/diagnostics.hpp"
#include "hjm/dynamics/simulate.hpp"
#include "hjm/malliavin/first_variation.hpp"
#include "hjm/malliavin/nested.hpp"
#include "hjm/malliavin/wiener.hpp"

using namespace hjm;
using namespace hjm::dynamics;
using namespace hjm::malliavin;

namespace {

// sigma* delta_s = tau0 P~(s) for every live node, one factor.
class UniformLognormal final : public VolatilityModel {
public:
    UniformLognormal(curvespace::GridPtr g, double tau0) : VolatilityModel(std::move(g), 1), tau0_(tau0) {}
    std::string kind() const override { return "uniform_lognormal"; }
    bool state_dependent() const override { return false; }
    void relative_loadings(double t, std::span<const double>, std::span<double> h) const override {
        const std::size_t i0 = first_live_node(*grid(), t);
        for (std::size_t i = 0; i < nodes(); ++i) h[i] = i < i0 ? 0.0 : tau0_;
    }
    void relative_loadings_tangent(double, std::span<const double>, std::span<const double>,
                                   std::span<double> dh) const override {
        std::fill(dh.begin(), dh.end(), 0.0);
    }
    void relative_loadings_adjoint(double, std::span<const double>, std::span<const double>,
                                   std::span<double>) const override {}

private:
    double tau0_;
};

SimulationConfig stored(double horizon, std::size_t steps, std::size_t paths, std::uint64_t seed,
                        std::optional<Scheme> scheme = std::nullopt) {
    SimulationConfig c;
    c.time = TimeGrid::uniform(horizon, steps);
    c.paths = paths;
    c.seed = seed;
    c.scheme = scheme;
    c.store_states = true;
    c.store_increments = true;
    return c;
}

std::vector<double> wavy(const curvespace::GridPtr& g, double rate) {
    auto x = fixtures::flat_discounted(g, rate);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= std::exp(0.02 * std::cos(0.4 * g->node(i)));
    return x;
}

double f1v(const curvespace::MaturityGrid& g, const Vector& v) {
    return curvespace::f1v_norm(g, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

// <c, x>
class LinearPayout final : public CurveFunctional {
public:
    explicit LinearPayout(std::vector<double> c) : c_(std::move(c)) {}
    double value(std::span<const double> x) const override {
        double acc = 0.0;
        for (std::size_t i = 0; i < c_.size(); ++i) acc += c_[i] * x[i];
        return acc;
    }
    void gradient(std::span<const double>, std::span<double> out) const override {
        std::copy(c_.begin(), c_.end(), out.begin());
    }

private:
    std::vector<double> c_;
};

}  // namespace

TEST_CASE("zero volatility: identity first variation and zero derivative") {
    auto g = fixtures::yearly_grid();
    auto x0 = fixtures::flat_discounted(g, 0.04);
    ZeroVolatility zero(g, 3);
    auto b = simulate(zero, x0, stored(5.0, 20, 2, 3));
    auto p = view(b, 1);
    const auto n = static_cast<Eigen::Index>(g->size());
    for (std::size_t l : {0u, 7u, 20u}) CHECK(first_variation(zero, b.scheme, p, l, 20) == Matrix::Identity(n, n));
    auto pic = picard_first_variation(zero, p, 0, 20, Matrix::Identity(n, n), 2);
    CHECK(pic[1] == Matrix::Identity(n, n));
    CHECK(pic[2] == Matrix::Identity(n, n));
    CHECK(malliavin_derivative_curve(zero, b.scheme, p, 4).isZero(0.0));
}

TEST_CASE("lognormal nodes: first variation is the price ratio") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.05);
    const double tau0 = 0.2;
    UniformLognormal m(g, tau0);
    for (Scheme s : {Scheme::euler, Scheme::log_euler}) {
        auto b = simulate(m, x0, stored(5.0, 40, 6, 11, s));
        for (std::size_t path = 0; path < b.paths; ++path) {
            auto p = view(b, path);
            const std::size_t l = 8;
            Matrix y = first_variation(m, s, p, l, 40);
            Matrix d = malliavin_derivative_curve(m, s, p, l);
            for (std::size_t i = 0; i < g->size(); ++i) {
                const double ratio = b.terminal_state(path)[i] / p.state(l)[i];
                CHECK(y(i, i) == doctest::Approx(ratio).epsilon(1e-12));
                // matured at t = 1.6: frozen identity
                if (g->node(i) <= 1.6) CHECK(y(i, i) == 1.0);
            }
            // D_t P~_T(s) = P~_T(s) tau0 for nodes alive through T
            for (std::size_t i = 6; i < g->size(); ++i)
                CHECK(d(i, 0) == doctest::Approx(b.terminal_state(path)[i] * tau0).epsilon(1e-12));
            CHECK((y - Matrix(y.diagonal().asDiagonal())).isZero(0.0));
        }
    }
}

TEST_CASE("terminal identity: D_T P~_T = sigma(T, P~_T)") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.05);
    auto m = fixtures::local(g, 4);
    auto b = simulate(*m, x0, stored(2.0, 16, 2, 5));
    auto p = view(b, 0);
    CHECK(malliavin_derivative_curve(*m, b.scheme, p, 16) == m->sigma(2.0, b.terminal_state(0)));
}

TEST_CASE("gaussian first variation does not depend on the curve level") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.05);
    auto x1 = x0;
    for (double& v : x1) v *= 0.7;
    auto m = fixtures::three_factor(g);
    auto b0 = simulate(*m, x0, stored(5.0, 50, 3, 21));
    auto b1 = simulate(*m, x1, stored(5.0, 50, 3, 21));
    for (std::size_t path = 0; path < 3; ++path) {
        Matrix y0 = first_variation(*m, b0.scheme, view(b0, path), 10, 50);
        Matrix y1 = first_variation(*m, b1.scheme, view(b1, path), 10, 50);
        CHECK((y0 - y1).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("picard iterates: one-step identity and convergence to the euler solution") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.05);
    auto m = fixtures::three_factor(g);
    const std::size_t steps = 8;
    auto b = simulate(*m, x0, stored(4.0, steps, 1, 8, Scheme::euler));
    auto p = view(b, 0);
    const auto n = static_cast<Eigen::Index>(g->size());
    auto pic = picard_first_variation(*m, p, 0, steps, Matrix::Identity(n, n), steps);
    // Y^1 = I + sum_l grad sigma dW_l: for linear sigma the diagonal is 1 + sum_l z_l
    std::vector<double> h(g->size() * 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 1.0;
        for (std::size_t l = 0; l < steps; ++l) {
            m->relative_loadings(b.time.time(l), p.state(l), h);
            for (std::size_t k = 0; k < 3; ++k) acc += h[i * 3 + k] * p.increment(l)[k];
        }
        CHECK(pic[1](i, i) == doctest::Approx(acc).epsilon(1e-14));
    }
    Matrix y = first_variation(*m, Scheme::euler, p, 0, steps);
    CHECK((pic[steps] - y).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("picard differences decay factorially on the local model") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.045);
    auto m = fixtures::local(g, 6, 1.0);
    const double horizon = 5.0;
    auto b = simulate(*m, x0, stored(horizon, 50, 200, 31));
    const auto n = static_cast<Eigen::Index>(g->size());
    Matrix dir(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) dir(i, 0) = std::cos(0.5 * static_cast<double>(i)) * x0[i];
    dir /= f1v(*g, dir.col(0));
    const std::size_t iters = 6;
    std::vector<double> msd(iters, 0.0);
    for (std::size_t path = 0; path < b.paths; ++path) {
        auto pic = picard_first_variation(*m, view(b, path), 0, 50, dir, iters);
        for (std::size_t it = 0; it < iters; ++it) {
            const double d = f1v(*g, Vector(pic[it + 1].col(0) - pic[it].col(0)));
            msd[it] += d * d / static_cast<double>(b.paths);
        }
    }
    auto states = sample_states(*g, x0, 20, 4, 0.05);
    const double c = lipschitz_estimate(*m, 0.0, states);
    const double ct = c * c * horizon;
    MESSAGE("C^2 (T - t) = " << ct);
    for (std::size_t it = 1; it < iters; ++it) {
        const double ratio = msd[it] / msd[it - 1];
        MESSAGE("n = " << it << " ratio " << ratio);
        CHECK(ratio <= ct / static_cast<double>(it) * 1.5);
        if (static_cast<double>(it) > ct) CHECK(ratio <= 0.5);
    }
}

TEST_CASE("adjoint is the transpose of the tangent and the flow composes") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.05);
    auto m = fixtures::local(g, 5, 0.7);
    auto b = simulate(*m, x0, stored(5.0, 40, 2, 13));
    auto p = view(b, 1);
    const std::size_t n = g->size();
    Vector u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = std::sin(0.9 * i) * x0[i];
        v[i] = std::cos(1.3 * i);
    }
    Matrix y = first_variation(*m, b.scheme, p, 4, 40);
    Vector yt_v = propagate_adjoint(*m, b.scheme, p, 4, 40, v);
    CHECK(v.dot(y * u) == doctest::Approx(yt_v.dot(u)).epsilon(1e-11));
    Matrix head = first_variation(*m, b.scheme, p, 4, 22);
    Matrix tail = first_variation(*m, b.scheme, p, 22, 40);
    CHECK((tail * head - y).cwiseAbs().maxCoeff() <= 1e-12 * y.cwiseAbs().maxCoeff());
}

TEST_CASE("linearization from cached forward loadings") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.05);
    auto m = fixtures::local(g, 5, 0.7);
    const std::size_t n = g->size();
    for (Scheme scheme : {Scheme::log_euler, Scheme::euler}) {
        auto b = simulate(*m, x0, stored(5.0, 20, 1, 3, scheme));
        auto p = view(b, 0);
        StepLinearization fresh(*m, scheme), cached(*m, scheme);
        std::vector<double> h(n * m->factors()), dx(n), a(n), c(n);
        for (std::size_t i = 0; i < n; ++i) dx[i] = std::sin(0.3 * i + 1.0);
        for (std::size_t l = 0; l < 20; ++l) {
            const double t = b.time.time(l), dt = b.time.dt(l);
            m->relative_loadings(t, p.state(l), h);
            fresh.set(t, dt, p.state(l), p.increment(l));
            cached.set(t, dt, p.state(l), p.state(l + 1), h, p.increment(l));
            fresh.tangent(dx, a);
            cached.tangent(dx, c);
            for (std::size_t i = 0; i < n; ++i) CHECK(c[i] == doctest::Approx(a[i]).epsilon(1e-12));
            fresh.adjoint(dx, a);
            cached.adjoint(dx, c);
            for (std::size_t i = 0; i < n; ++i) CHECK(c[i] == doctest::Approx(a[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("first variation matches finite differences of the simulated curve") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.05);
    std::vector<ModelPtr> models{fixtures::ho_lee(g, 0.015), fixtures::three_factor(g), fixtures::local(g)};
    const std::size_t n = g->size();
    std::vector<double> hdir(n);
    for (std::size_t i = 0; i < n; ++i) hdir[i] = x0[i] * std::cos(0.3 * i);
    const double eps = 1e-4;
    for (const auto& m : models) {
        auto up = x0, dn = x0;
        for (std::size_t i = 0; i < n; ++i) {
            up[i] += eps * hdir[i];
            dn[i] -= eps * hdir[i];
        }
        auto base = simulate(*m, x0, stored(5.0, 50, 8, 99));
        auto bu = simulate(*m, up, stored(5.0, 50, 8, 99));
        auto bd = simulate(*m, dn, stored(5.0, 50, 8, 99));
        for (std::size_t path = 0; path < base.paths; ++path) {
            Matrix col = Eigen::Map<const Eigen::VectorXd>(hdir.data(), static_cast<Eigen::Index>(n));
            Vector yh = propagate_tangent(*m, base.scheme, view(base, path), 0, 50, col).col(0);
            Vector fd(n);
            for (std::size_t i = 0; i < n; ++i)
                fd[i] = (bu.terminal_state(path)[i] - bd.terminal_state(path)[i]) / (2.0 * eps);
            CHECK(f1v(*g, Vector(yh - fd)) <= 0.01 * f1v(*g, yh));
        }
    }
}

TEST_CASE("growth bound on the first variation") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.05);
    std::vector<ModelPtr> models{fixtures::three_factor(g), fixtures::local(g, 6, 1.0)};
    const double horizon = 5.0;
    const std::size_t n = g->size();
    for (const auto& m : models) {
        auto b = simulate(*m, x0, stored(horizon, 50, 400, 17));
        auto states = sample_states(*g, x0, 20, 4, 0.05);
        const double c = lipschitz_estimate(*m, 0.0, states);
        std::vector<double> sq(b.paths);
        for (std::size_t path = 0; path < b.paths; ++path) {
            Matrix dir(n, 1);
            for (std::size_t i = 0; i < n; ++i) dir(i, 0) = std::cos(0.37 * (path + 1) * i + path);
            dir /= f1v(*g, dir.col(0));
            Vector yx = propagate_tangent(*m, b.scheme, view(b, path), 0, 50, dir).col(0);
            sq[path] = std::pow(f1v(*g, yx), 2);
        }
        auto ms = mean_se(sq);
        const double bound = std::exp(c * c * horizon) * (1.0 + 3.0 * ms.se / ms.mean);
        MESSAGE(m->kind() << ": E|Yx|^2 = " << ms.mean << ", bound " << bound);
        CHECK(ms.mean <= bound);
    }
}

TEST_CASE("nested conditional gradient of a linear payout") {
    auto g = fixtures::yearly_grid();
    auto x0 = wavy(g, 0.05);
    const std::size_t n = g->size();
    std::vector<double> c(n, 0.0);
    c[10] = 1.0;
    c[4] = -0.5;
    LinearPayout payout(c);
    std::vector<ModelPtr> models{fixtures::ho_lee(g), fixtures::local(g, 4)};
    for (const auto& m : models) {
        auto time = TimeGrid::uniform(5.0, 25);
        NestedConfig nc;
        nc.inner_paths = 400;
        nc.seed = 5;
        auto est = conditional_gradient(*m, default_scheme(*m), time, 5, x0, payout, nc);
        double v0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) v0 += c[i] * x0[i];
        CHECK(std::abs(est.value.mean - v0) <= 3.0 * est.value.se + 1e-14);
        // matured node 4 (s = 4 > t = 1): martingale of the pulled-back gradient
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(est.phi[i] - c[i]) <= 3.0 * est.phi_se[i] + 1e-14);
        Matrix sigma = m->sigma(1.0, x0);
        Vector expect = sigma.transpose() * Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < m->factors(); ++k)
            CHECK(std::abs(est.alpha[k] - expect[k]) <= 3.0 * est.alpha_se[k] + 1e-14);
    }
    NestedConfig bad;
    bad.inner_paths = 1;
    bad.antithetic = false;
    CHECK_THROWS_AS(conditional_gradient(*models[0], Scheme::euler, TimeGrid::uniform(5.0, 25), 0, x0, payout, bad),
                    PreconditionError);
}

TEST_CASE("clark-ocone integrands of wiener functionals") {
    auto time = TimeGrid::uniform(1.0, 20);
    SUBCASE("linear functional: exact and zero variance") {
        LinearFunctional x(2, [](double t, std::span<double> out) {
            out[0] = 1.0 + t;
            out[1] = -0.5 * t * t;
        });
        auto dw = wiener_increments(time, 2, 3, 0);
        for (std::size_t l : {0u, 9u, 19u}) {
            auto est = nested_integrand(x, time, dw, l, 16, 3, 0);
            CHECK(est.components[0].mean == doctest::Approx(1.0 + time.time(l)).epsilon(1e-15));
            CHECK(est.components[1].mean == doctest::Approx(-0.5 * time.time(l) * time.time(l)).epsilon(1e-15));
            CHECK(est.components[0].se <= 1e-15);
        }
    }
    SUBCASE("W_T squared") {
        BrownianPower x(1, 0, 2);
        for (std::size_t path = 0; path < 5; ++path) {
            auto dw = wiener_increments(time, 1, 8, path);
            for (std::size_t l : {3u, 12u}) {
                auto est = nested_integrand(x, time, dw, l, 2000, 8, path);
                double w = 0.0;
                for (std::size_t m = 0; m < l; ++m) w += dw[m];
                CHECK(std::abs(est.components[0].mean - 2.0 * w) <= 3.0 * est.components[0].se);
            }
        }
    }
    SUBCASE("exponential martingale") {
        ExponentialMartingale x({0.8, -0.3});
        for (std::size_t path = 0; path < 5; ++path) {
            auto dw = wiener_increments(time, 2, 12, path);
            std::vector<double> exact(2);
            x.exact_integrand(time, dw, 10, exact);
            auto est = nested_integrand(x, time, dw, 10, 2000, 12, path);
            for (std::size_t k = 0; k < 2; ++k)
                CHECK(std::abs(est.components[k].mean - exact[k]) <= 3.0 * est.components[k].se);
        }
    }
}

TEST_CASE("martingale representation residuals") {
    LinearFunctional lin(1, [](double t, std::span<double> out) { out[0] = std::cos(3.0 * t); });
    auto rl = reconstruct(lin, TimeGrid::uniform(1.0, 100), 200, 1, IntegrandSource::exact);
    CHECK(rl.rms_residual <= 1e-13);

    ExponentialMartingale em({1.0});
    auto coarse = reconstruct(em, TimeGrid::uniform(1.0, 500), 4000, 2, IntegrandSource::exact);
    auto fine = reconstruct(em, TimeGrid::uniform(1.0, 1000), 4000, 2, IntegrandSource::exact);
    MESSAGE("relative rms " << coarse.relative_rms << " -> " << fine.relative_rms);
    CHECK(coarse.relative_rms <= 0.05);
    const double gain = coarse.relative_rms / fine.relative_rms;
    CHECK(gain >= 1.25);
    CHECK(gain <= 1.6);

    // nested integrand on a short grid agrees with the closed form up to MC error
    auto nested = reconstruct(em, TimeGrid::uniform(1.0, 10), 100, 3, IntegrandSource::nested, 400);
    auto exact = reconstruct(em, TimeGrid::uniform(1.0, 10), 100, 3, IntegrandSource::exact);
    CHECK(nested.relative_rms <= exact.relative_rms + 0.05);
}

TEST_CASE("integration by parts") {
    auto time = TimeGrid::uniform(2.0, 40);
    auto unit = [](std::size_t, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    SUBCASE("constant functional") {
        ConstantFunctional x(1, 3.0);
        auto r = integration_by_parts_check(x, unit, time, 4000, 1);
        CHECK(r.lhs.mean == 0.0);
        CHECK(r.pass);
    }
    SUBCASE("W_T against a unit direction") {
        BrownianPower x(1, 0, 1);
        auto r = integration_by_parts_check(x, unit, time, 4000, 7);
        CHECK(r.lhs.mean == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(std::abs(r.rhs.mean - 2.0) <= 3.0 * r.rhs.se);
        CHECK(r.pass);
    }
    SUBCASE("W_T squared against a unit direction") {
        BrownianPower x(1, 0, 2);
        auto r = integration_by_parts_check(x, unit, time, 4000, 3);
        CHECK(std::abs(r.lhs.mean) <= 3.0 * r.lhs.se);
        CHECK(std::abs(r.rhs.mean) <= 3.0 * r.rhs.se);
        CHECK(r.pass);
    }
    SUBCASE("exponential martingale against a path-dependent direction") {
        ExponentialMartingale x({0.5, 0.4});
        AdaptedProcess beta = [](std::size_t, std::span<const double> past, std::span<double> out) {
            double w0 = 0.0;
            for (std::size_t m = 0; m < past.size(); m += 2) w0 += past[m];
            out[0] = std::cos(w0);
            out[1] = 1.0;
        };
        auto r = integration_by_parts_check(x, beta, time, 4000, 4);
        CHECK(r.pass);
        CHECK(r.lhs.mean > 0.1);
    }
}
