#include "hjm/hedging/strategy.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "hjm/core/error.hpp"
#include "hjm/dynamics/diagnostics.hpp"
#include "hjm/hedging/gaussian.hpp"

namespace hjm::hedging {

using curvespace::PortfolioMeasure;
using dynamics::Scheme;

namespace {

double estimate_sigma_lipschitz(const dynamics::VolatilityModel& model, std::span<const double> x0,
                                std::uint64_t seed) {
    auto states = dynamics::sample_states(*model.grid(), x0, 20, seed ^ 0x5157ULL, 0.05);
    return dynamics::lipschitz_estimate(model, 0.0, states);
}

double dual_bound(const BoundPayout& payout, double c, double t) {
    return payout.payout().lipschitz * std::exp(0.5 * c * c * (payout.payout().expiry - t));
}

ErrorStats error_stats(std::span<const double> errors, std::span<const double> payoffs) {
    ErrorStats s;
    s.paths = errors.size();
    std::vector<double> sq(errors.size());
    for (std::size_t p = 0; p < errors.size(); ++p) {
        sq[p] = errors[p] * errors[p];
        s.max_abs = std::max(s.max_abs, std::abs(errors[p]));
    }
    s.rms = std::sqrt(dynamics::pairwise_sum(sq) / static_cast<double>(errors.size()));
    s.mean = dynamics::mean_se(errors).mean;
    s.sd_payout = dynamics::mean_se(payoffs).sd;
    s.relative_rms = s.sd_payout > 0.0 ? s.rms / s.sd_payout : s.rms;
    return s;
}

// Writes the weights (one per node) and their standard errors for step l.
using StrategyFn = std::function<void(std::size_t path, std::size_t l, double t, std::span<const double> x,
                                      std::span<double> weights, std::span<double> se, double& bound)>;

HedgeReport backtest(const dynamics::VolatilityModel& model, const BoundPayout& payout, std::span<const double> x0,
                     const HedgeConfig& config, std::optional<double> v0, const StrategyFn& strategy) {
    const auto& time = config.sim.time;
    const auto& grid = *model.grid();
    const std::size_t n = model.nodes(), nf = model.factors();
    const std::size_t steps = time.steps();
    const std::size_t expiry_step = time.index_of(payout.payout().expiry);
    require(expiry_step <= steps, "hedge: the payout expiry must be a simulation time");
    require(std::abs(time.horizon() - payout.payout().settlement()) <= 1e-9,
            "hedge: the simulation horizon must be the settlement date");
    require(config.rebalance_every >= 1, "hedge: rebalance stride must be positive");
    dynamics::check_refinement(time, config.sim.refine);
    require(x0.size() == n, "hedge: initial curve does not match grid");
    const Scheme scheme = config.sim.scheme.value_or(dynamics::default_scheme(model));
    const std::size_t paths = config.sim.paths;

    std::vector<double> targets(paths), gains(paths), bank(paths);
    std::vector<std::vector<WeightSlice>> recorded(std::min(paths, config.record_paths));
    std::vector<std::vector<std::vector<double>>> recorded_states(recorded.size());
    std::vector<std::uint8_t> flagged(paths, 0);

    dynamics::parallel_for(paths, config.sim.threads, [&](std::size_t p) {
        dynamics::Stepper stepper(model, scheme);
        const auto stream = dynamics::path_stream(config.sim.seed, p, config.sim.antithetic);
        std::vector<double> x(x0.begin(), x0.end()), prev(n), w(n, 0.0), se(n, 0.0), dw(nf);
        double gain = 0.0, carry_units = 0.0;
        bool ok = true;
        for (std::size_t l = 0; l < steps; ++l) {
            const double t = time.time(l);
            if (l < expiry_step && l % config.rebalance_every == 0) {
                double bound = 0.0;
                strategy(p, l, t, x, w, se, bound);
                if (p < recorded.size()) {
                    WeightSlice s;
                    s.t = t;
                    s.step = l;
                    s.path = p;
                    s.phi = PortfolioMeasure(model.grid(), t);
                    std::copy(w.begin(), w.end(), s.phi.weights().begin());
                    s.se = se;
                    s.wealth = gain;
                    s.dual_norm = curvespace::dual_norm(s.phi);
                    s.dual_bound = bound;
                    recorded[p].push_back(std::move(s));
                    recorded_states[p].push_back(x);
                }
            } else if (l == expiry_step) {
                carry_units = payout.payoff(x);
                std::fill(w.begin(), w.end(), 0.0);
                w[payout.settlement_node()] = carry_units;
            }
            dynamics::draw_increments(stream, time, l, dw, config.sim.refine);
            prev = x;
            ok = stepper.step(t, time.dt(l), x, dw) && ok;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += w[i] * (x[i] - prev[i]);
            gain += acc;
        }
        flagged[p] = ok ? 0 : 1;
        targets[p] = expiry_step == steps ? payout.value(x) : carry_units * x[payout.settlement_node()];
        gains[p] = gain;
        bank[p] = 1.0 / curvespace::log_linear_at(grid, x, time.horizon());
    });
    for (auto f : flagged)
        if (f) throw NumericalError("hedge: a path lost positivity; use the log-Euler scheme");

    HedgeReport r;
    r.payout = payout.payout().label;
    r.longest_underlying = payout.payout().longest_underlying();
    r.mc_price = dynamics::mean_se(targets, config.sim.antithetic);
    r.price = v0.value_or(r.mc_price.mean);
    r.price_se = v0 ? 0.0 : r.mc_price.se;
    r.terminal_errors.resize(paths);
    std::vector<double> undiscounted(paths), undiscounted_payoff(paths);
    for (std::size_t p = 0; p < paths; ++p) {
        r.terminal_errors[p] = targets[p] - r.price - gains[p];
        undiscounted[p] = bank[p] * r.terminal_errors[p];
        undiscounted_payoff[p] = bank[p] * targets[p];
    }
    r.error = error_stats(r.terminal_errors, targets);
    r.undiscounted_error = error_stats(undiscounted, undiscounted_payoff);
    for (std::size_t p = 0; p < recorded.size(); ++p)
        for (std::size_t j = 0; j < recorded[p].size(); ++j) {
            WeightSlice& s = recorded[p][j];
            s.wealth += r.price;
            s.varphi = self_financing_complete(
                s.phi, s.wealth, curvespace::DiscountedCurve{model.grid(), recorded_states[p][j], s.t});
            r.slices.push_back(std::move(s));
        }
    r.support = support_check(r.slices, r.longest_underlying);
    return r;
}

// Total call volatility at every rebalance step (deterministic in a Gaussian model).
std::vector<double> call_vols(const dynamics::GaussianHjm& model, const BoundPayout& payout, const HedgeConfig& config,
                              std::size_t expiry_step) {
    const Payout& p = payout.payout();
    std::vector<double> vols(expiry_step, 0.0);
    for (std::size_t l = 0; l < expiry_step; l += config.rebalance_every)
        vols[l] = std::sqrt(gaussian_call_variance(model, config.sim.time.time(l), p.expiry, p.maturities[0]));
    return vols;
}

dynamics::TimeGrid truncated(const dynamics::TimeGrid& time, std::size_t last) {
    std::vector<double> t(time.times().begin(), time.times().begin() + static_cast<std::ptrdiff_t>(last) + 1);
    return dynamics::TimeGrid(std::move(t));
}

}  // namespace

Prehedge prehedge(const dynamics::VolatilityModel& model, Scheme scheme, const BoundPayout& payout,
                  const dynamics::TimeGrid& time, std::size_t l, std::span<const double> x,
                  const malliavin::NestedConfig& config, double sigma_lipschitz) {
    require(std::abs(time.horizon() - payout.payout().expiry) <= 1e-9,
            "prehedge: inner paths must end at the payout expiry");
    const auto est = malliavin::conditional_gradient(model, scheme, time, l, x, payout, config);
    Prehedge out;
    out.phi = PortfolioMeasure(model.grid(), time.time(l));
    for (std::size_t i = 0; i < model.nodes(); ++i) out.phi.weight(i) = est.phi[static_cast<Eigen::Index>(i)];
    out.se.assign(est.phi_se.data(), est.phi_se.data() + est.phi_se.size());
    out.value = est.value;
    out.dual_norm = curvespace::dual_norm(out.phi);
    out.dual_bound = dual_bound(payout, sigma_lipschitz, time.time(l));
    return out;
}

PortfolioMeasure self_financing_complete(const PortfolioMeasure& phi, double wealth,
                                         const curvespace::BondCurve& bonds) {
    PortfolioMeasure out = phi;
    out.set_cash(phi.cash() + wealth - curvespace::pair(phi, bonds));
    return out;
}

PortfolioMeasure self_financing_complete(const PortfolioMeasure& phi, double discounted_wealth,
                                         const curvespace::DiscountedCurve& discounted) {
    const double at_t = curvespace::log_linear_at(*discounted.grid, discounted.values, discounted.as_of);
    require(at_t > 0.0, "self_financing_complete: P~_t(t) must be positive");
    PortfolioMeasure out = phi;
    double risky = 0.0;
    for (std::size_t i = 0; i < discounted.values.size(); ++i) risky += phi.weight(i) * discounted.values[i];
    out.set_cash((discounted_wealth - risky) / at_t);
    return out;
}

double replication_cost(const dynamics::VolatilityModel& model, const HedgeConfig& config, bool nested) {
    const double per_step = static_cast<double>(model.nodes() * model.factors());
    const std::size_t steps = config.sim.time.steps();
    const double outer = static_cast<double>(config.sim.paths);
    if (!nested) return outer * static_cast<double>(steps) * per_step;
    double inner_steps = 0.0;
    for (std::size_t l = 0; l < steps; l += std::max<std::size_t>(config.rebalance_every, 1))
        inner_steps += static_cast<double>(steps - l);
    return outer * (static_cast<double>(config.inner_paths) * inner_steps + static_cast<double>(steps)) * per_step;
}

HedgeReport replicate(const dynamics::VolatilityModel& model, const BoundPayout& payout, std::span<const double> x0,
                      const HedgeConfig& config) {
    const bool bond = is_bond_claim(payout);
    const bool closed_form = bond || (config.analytic && has_gaussian_oracle(model, payout));
    const double cost = replication_cost(model, config, !closed_form);
    if (cost > config.budget_cap) {
        std::ostringstream msg;
        msg << "replicate: estimated cost " << cost << " exceeds the cap " << config.budget_cap;
        throw BudgetError(msg.str(), cost);
    }
    const Scheme scheme = config.sim.scheme.value_or(dynamics::default_scheme(model));
    const double c = config.sigma_lipschitz > 0.0 ? config.sigma_lipschitz
                                                  : estimate_sigma_lipschitz(model, x0, config.sim.seed);
    const std::size_t expiry_step = config.sim.time.index_of(payout.payout().expiry);
    require(expiry_step <= config.sim.time.steps(), "replicate: the payout expiry must be a simulation time");
    const dynamics::TimeGrid to_expiry = truncated(config.sim.time, expiry_step);
    const auto* gaussian = dynamic_cast<const dynamics::GaussianHjm*>(&model);
    const std::vector<double> vols =
        closed_form && !bond ? call_vols(*gaussian, payout, config, expiry_step) : std::vector<double>{};

    auto nested = [&](std::size_t path) {
        malliavin::NestedConfig nc;
        nc.inner_paths = config.inner_paths;
        nc.seed = config.sim.seed;
        nc.outer = path;
        nc.antithetic = config.inner_antithetic;
        nc.threads = 1;
        return nc;
    };
    // every outer path starts from x0, so the t = 0 hedge and price are shared
    Prehedge initial;
    if (!closed_form) initial = prehedge(model, scheme, payout, to_expiry, 0, x0, nested(0), c);

    StrategyFn strategy = [&](std::size_t path, std::size_t l, double t, std::span<const double> x,
                              std::span<double> w, std::span<double> se, double& bound) {
        if (closed_form) {
            std::fill(se.begin(), se.end(), 0.0);
            bound = dual_bound(payout, c, t);
            if (bond) {
                std::fill(w.begin(), w.end(), 0.0);
                w[payout.underlying_nodes()[0]] = 1.0;
                return;
            }
            const PortfolioMeasure phi = gaussian_prehedge(payout, t, x, vols[l]);
            std::copy(phi.weights().begin(), phi.weights().end(), w.begin());
            return;
        }
        const Prehedge ph = l == 0 ? initial : prehedge(model, scheme, payout, to_expiry, l, x, nested(path), c);
        std::copy(ph.phi.weights().begin(), ph.phi.weights().end(), w.begin());
        std::copy(ph.se.begin(), ph.se.end(), se.begin());
        bound = ph.dual_bound;
    };
    std::optional<double> v0;
    double v0_se = 0.0;
    if (bond) {
        v0 = x0[payout.underlying_nodes()[0]];
    } else if (closed_form) {
        v0 = gaussian_zcb_call(*gaussian, payout, 0.0, x0).price;
    } else {
        dynamics::SimulationConfig ps = config.sim;
        ps.time = to_expiry;
        ps.paths = config.price_paths + config.price_paths % 2;
        ps.seed = config.sim.seed ^ 0x9e3779b97f4a7c15ULL;
        ps.antithetic = true;
        ps.refine = 0;
        const auto mc = price(model, payout, x0, ps);
        v0 = mc.mean;
        v0_se = mc.se;
    }
    HedgeReport r = backtest(model, payout, x0, config, v0, strategy);
    r.method = closed_form ? "prehedge_closed_form" : "prehedge_nested";
    r.price_se = v0_se;
    r.estimated_cost = cost;
    return r;
}

HedgeReport finite_factor_hedge(const dynamics::GaussianHjm& model, const BoundPayout& payout,
                                std::span<const double> x0, std::span<const double> hedge_maturities,
                                const HedgeConfig& config) {
    const std::size_t d = model.factors();
    require(hedge_maturities.size() == d, "finite_factor_hedge: need one hedge bond per factor");
    std::vector<std::size_t> nodes;
    for (double m : hedge_maturities) {
        require(m > payout.payout().expiry, "finite_factor_hedge: hedge maturities must exceed the expiry");
        nodes.push_back(model.grid()->require_node(m));
    }
    const bool bond = is_bond_claim(payout);
    const bool closed_form = bond || (config.analytic && has_gaussian_oracle(model, payout));
    const double cost = replication_cost(model, config, !closed_form);
    if (cost > config.budget_cap) {
        std::ostringstream msg;
        msg << "finite_factor_hedge: estimated cost " << cost << " exceeds the cap " << config.budget_cap;
        throw BudgetError(msg.str(), cost);
    }
    const Scheme scheme = config.sim.scheme.value_or(dynamics::default_scheme(model));
    const std::size_t expiry_step = config.sim.time.index_of(payout.payout().expiry);
    require(expiry_step <= config.sim.time.steps(), "finite_factor_hedge: the expiry must be a simulation time");
    const dynamics::TimeGrid to_expiry = truncated(config.sim.time, expiry_step);
    const std::vector<double> vols =
        closed_form && !bond ? call_vols(model, payout, config, expiry_step) : std::vector<double>{};

    StrategyFn strategy = [&](std::size_t path, std::size_t l, double t, std::span<const double> x,
                              std::span<double> w, std::span<double> se, double& bound) {
        const dynamics::Matrix sigma = model.sigma(t, x);
        Eigen::VectorXd alpha(d), alpha_se = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
        if (bond) {
            alpha = sigma.row(static_cast<Eigen::Index>(payout.underlying_nodes()[0])).transpose();
        } else if (closed_form) {
            const PortfolioMeasure phi = gaussian_prehedge(payout, t, x, vols[l]);
            const Eigen::Map<const Eigen::VectorXd> pw(phi.weights().data(), static_cast<Eigen::Index>(x.size()));
            alpha = sigma.transpose() * pw;
        } else {
            malliavin::NestedConfig nc;
            nc.inner_paths = config.inner_paths;
            nc.seed = config.sim.seed;
            nc.outer = path;
            nc.antithetic = config.inner_antithetic;
            const auto est = malliavin::conditional_gradient(model, scheme, to_expiry, l, x, payout, nc);
            alpha = est.alpha;
            alpha_se = est.alpha_se;
        }
        dynamics::Matrix m(d, d);
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t i = 0; i < d; ++i) m(k, i) = sigma(nodes[i], k);
        const auto spec = dynamics::spectrum(m);
        if (!(spec.condition <= 1e8)) {
            std::ostringstream msg;
            msg << "finite_factor_hedge: hedge matrix is singular at t = " << t << " (condition number "
                << spec.condition << ", smallest singular value " << spec.min_singular
                << "); the hedge bonds do not span the factors";
            throw PreconditionError(msg.str());
        }
        const Eigen::MatrixXd inv = Eigen::MatrixXd(m).inverse();
        const Eigen::VectorXd phi = inv * alpha;
        std::fill(w.begin(), w.end(), 0.0);
        std::fill(se.begin(), se.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            w[nodes[i]] += phi[static_cast<Eigen::Index>(i)];
            double v = 0.0;
            for (std::size_t k = 0; k < d; ++k) v += std::pow(inv(i, k) * alpha_se[static_cast<Eigen::Index>(k)], 2);
            se[nodes[i]] = std::sqrt(v);
        }
        bound = 0.0;
    };
    std::optional<double> v0;
    if (bond)
        v0 = x0[payout.underlying_nodes()[0]];
    else if (closed_form)
        v0 = gaussian_zcb_call(model, payout, 0.0, x0).price;
    HedgeReport r = backtest(model, payout, x0, config, v0, strategy);
    r.method = closed_form ? "finite_factor_closed_form" : "finite_factor_nested";
    r.hedge_maturities.assign(hedge_maturities.begin(), hedge_maturities.end());
    r.estimated_cost = cost;
    return r;
}

SupportVerdict support_check(const std::vector<WeightSlice>& slices, double longest_underlying, double abs_tol,
                             double z) {
    SupportVerdict v;
    double worst_ratio = 0.0;
    for (const auto& s : slices) {
        const auto& g = *s.phi.grid();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double m = g.node(i);
            if (m >= s.t - 1e-9 && m <= longest_underlying + 1e-9) continue;
            const double w = s.phi.weight(i);
            const double threshold = std::max(abs_tol, z * (s.se.empty() ? 0.0 : s.se[i]));
            if (std::abs(w) > threshold) {
                v.pass = false;
                ++v.violations;
            }
            const double ratio = std::abs(w) / threshold;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                v.worst_time = s.t;
                v.worst_maturity = m;
                v.worst_weight = w;
                v.worst_threshold = threshold;
            }
        }
    }
    return v;
}

dynamics::MeanSe price(const dynamics::VolatilityModel& model, const BoundPayout& payout, std::span<const double> x0,
                       const dynamics::SimulationConfig& sim) {
    require(std::abs(sim.time.horizon() - payout.payout().expiry) <= 1e-9, "price: horizon must be the expiry");
    const auto b = dynamics::simulate(model, x0, sim);
    std::vector<double> v(b.paths);
    for (std::size_t p = 0; p < b.paths; ++p) v[p] = payout.value(b.terminal_state(p));
    return dynamics::mean_se(v, sim.antithetic);
}

DirectionalDerivative bump_revalue(const dynamics::VolatilityModel& model, const BoundPayout& payout,
                                   std::span<const double> x0, std::span<const double> h, double eps,
                                   const dynamics::SimulationConfig& sim) {
    require(eps > 0.0, "bump_revalue: eps must be positive");
    require(h.size() == x0.size(), "bump_revalue: direction does not match grid");
    require(std::abs(sim.time.horizon() - payout.payout().expiry) <= 1e-9, "bump_revalue: horizon must be the expiry");
    bool zero = true;
    for (double v : h) zero = zero && v == 0.0;
    if (zero) return {};
    std::vector<double> up(x0.begin(), x0.end()), dn(x0.begin(), x0.end());
    for (std::size_t i = 0; i < h.size(); ++i) {
        up[i] += eps * h[i];
        dn[i] -= eps * h[i];
    }
    const auto bu = dynamics::simulate(model, up, sim);
    const auto bd = dynamics::simulate(model, dn, sim);
    std::vector<double> d(bu.paths);
    for (std::size_t p = 0; p < bu.paths; ++p)
        d[p] = (payout.value(bu.terminal_state(p)) - payout.value(bd.terminal_state(p))) / (2.0 * eps);
    const auto ms = dynamics::mean_se(d, sim.antithetic);
    return {ms.mean, ms.se};
}

Prehedge bump_revalue_strategy(const dynamics::VolatilityModel& model, const BoundPayout& payout,
                               std::span<const double> x0, double eps, const dynamics::SimulationConfig& sim) {
    const std::size_t n = model.nodes();
    Prehedge out;
    out.phi = PortfolioMeasure(model.grid(), 0.0);
    out.se.assign(n, 0.0);
    std::vector<double> h(n, 0.0);
    for (std::size_t i = dynamics::first_live_node(*model.grid(), 0.0); i < n; ++i) {
        h[i] = 1.0;
        const auto d = bump_revalue(model, payout, x0, h, eps, sim);
        h[i] = 0.0;
        out.phi.weight(i) = d.value;
        out.se[i] = d.se;
    }
    out.value = price(model, payout, x0, sim);
    out.dual_norm = curvespace::dual_norm(out.phi);
    return out;
}

UniquenessGap uniqueness_gap(const dynamics::VolatilityModel& model, const std::vector<StrategyPair>& pairs,
                             double z) {
    UniquenessGap g;
    double sigma_sq = 0.0, noise_sq = 0.0;
    double worst = -1.0;
    const std::size_t n = model.nodes(), nf = model.factors();
    for (const auto& p : pairs) {
        PortfolioMeasure diff = p.a;
        diff.add_scaled(-1.0, p.b);
        PortfolioMeasure noise(model.grid(), p.t);
        for (std::size_t i = 0; i < n; ++i) {
            const double sa = p.se_a.empty() ? 0.0 : p.se_a[i];
            const double sb = p.se_b.empty() ? 0.0 : p.se_b[i];
            noise.weight(i) = std::hypot(sa, sb);
        }
        const double gap = curvespace::dual_norm(diff);
        const double threshold = z * curvespace::dual_norm(noise);
        const double ratio = threshold > 0.0 ? gap / threshold : (gap > 0.0 ? INFINITY : 0.0);
        if (ratio > worst) {
            worst = ratio;
            g.max_dual_gap = gap;
            g.dual_threshold = threshold;
        }
        const dynamics::Matrix sigma = model.sigma(p.t, p.x);
        for (std::size_t k = 0; k < nf; ++k) {
            double a = 0.0, v = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                a += sigma(i, k) * diff.weight(i);
                v += std::pow(sigma(i, k) * noise.weight(i), 2);
            }
            sigma_sq += p.weight * a * a;
            noise_sq += p.weight * v;
        }
    }
    g.sigma_gap = std::sqrt(sigma_sq);
    g.sigma_threshold = z * std::sqrt(noise_sq);
    g.pass = g.max_dual_gap <= g.dual_threshold && g.sigma_gap <= g.sigma_threshold;
    return g;
}

}  // namespace hjm::hedging
