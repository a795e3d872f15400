#include "hjm/dynamics/simulate.hpp"

#include <cmath>
#include <sstream>

#include "hjm/core/error.hpp"
#include "hjm/dynamics/parallel.hpp"
#include "hjm/simd/kernels.hpp"

namespace hjm::dynamics {

Scheme default_scheme(const VolatilityModel& model) {
    return model.kind() == "gaussian_hjm" ? Scheme::euler : Scheme::log_euler;
}

Scheme parse_scheme(const std::string& name) {
    if (name == "euler") return Scheme::euler;
    if (name == "log_euler") return Scheme::log_euler;
    throw ConfigError("unknown scheme '" + name + "' (expected euler or log_euler)");
}

std::string scheme_name(Scheme s) { return s == Scheme::euler ? "euler" : "log_euler"; }

Stepper::Stepper(const VolatilityModel& model, Scheme scheme)
    : model_(&model),
      scheme_(scheme),
      h_(model.nodes() * model.factors()),
      z_(model.nodes()),
      q_(model.nodes()),
      ones_(model.factors(), 1.0) {}

bool Stepper::step(double t, double dt, std::span<double> x, std::span<const double> dw) {
    const std::size_t n = model_->nodes();
    const std::size_t nf = model_->factors();
    const std::size_t i0 = first_live_node(*model_->grid(), t);
    if (i0 >= n) return true;
    model_->relative_loadings(t, x, h_);
    const auto& k = simd::kernels();
    const std::size_t live = n - i0;
    const double* h_live = h_.data() + i0 * nf;
    k.gemv(h_live, live, nf, dw.data(), z_.data() + i0);
    bool positive = true;
    if (scheme_ == Scheme::log_euler) {
        k.row_scaled_sumsq(h_live, live, nf, ones_.data(), q_.data() + i0);
        for (std::size_t i = i0; i < n; ++i) x[i] *= std::exp(z_[i] - 0.5 * q_[i] * dt);
    } else {
        for (std::size_t i = i0; i < n; ++i) {
            x[i] *= 1.0 + z_[i];
            positive = positive && x[i] > 0.0;
        }
    }
    return positive;
}

std::span<const double> PathBundle::terminal_state(std::size_t p) const {
    return std::span<const double>(terminal).subspan(p * nodes, nodes);
}

std::span<const double> PathBundle::state(std::size_t p, std::size_t l) const {
    require(!states.empty(), "PathBundle: states were not stored");
    return std::span<const double>(states).subspan((p * (time.steps() + 1) + l) * nodes, nodes);
}

std::span<const double> PathBundle::increment(std::size_t p, std::size_t l) const {
    require(!increments.empty(), "PathBundle: increments were not stored");
    return std::span<const double>(increments).subspan((p * time.steps() + l) * factors, factors);
}

void check_refinement(const TimeGrid& time, unsigned refine) {
    if (refine == 0) return;
    require(refine < 20, "refinement level too large");
    require(time.steps() % (std::size_t{1} << refine) == 0, "refinement needs a multiple of 2^r steps");
    for (std::size_t l = 0; l < time.steps(); ++l)
        require(std::abs(time.dt(l) - time.dt(0)) <= 1e-12 * time.horizon(), "refinement needs a uniform time grid");
}

void draw_increments(const NoiseStream& stream, const TimeGrid& time, std::size_t l, std::span<double> dw,
                     unsigned refine) {
    if (refine == 0) {
        stream.normals(static_cast<std::uint32_t>(l), dw);
        const double sq = std::sqrt(time.dt(l));
        for (double& v : dw) v *= sq;
        return;
    }
    // coarse increment over 2^r steps, then one bridge split per level
    double span = time.dt(l) * static_cast<double>(std::size_t{1} << refine);
    stream.normals(static_cast<std::uint32_t>(l >> refine), dw);
    for (double& v : dw) v *= std::sqrt(span);
    thread_local std::vector<double> z;
    z.resize(dw.size());
    for (unsigned k = 1; k <= refine; ++k) {
        const std::size_t segment = l >> (refine - k);
        stream.normals(static_cast<std::uint32_t>(segment >> 1), z, k);
        const double half = 0.5 * std::sqrt(span);
        const double sign = segment % 2 == 0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < dw.size(); ++j) dw[j] = 0.5 * dw[j] + sign * half * z[j];
        span *= 0.5;
    }
}

bool simulate_path(Stepper& stepper, const TimeGrid& time, std::size_t first, const NoiseStream& stream,
                   std::span<double> x, std::span<double> states, std::span<double> increments, unsigned refine) {
    const std::size_t n = x.size();
    const std::size_t nf = stepper.model().factors();
    std::vector<double> dw(nf);
    bool ok = true;
    if (!states.empty()) std::copy(x.begin(), x.end(), states.begin());
    for (std::size_t l = first; l < time.steps(); ++l) {
        draw_increments(stream, time, l, dw, refine);
        ok = stepper.step(time.time(l), time.dt(l), x, dw) && ok;
        const std::size_t r = l - first;
        if (!states.empty()) std::copy(x.begin(), x.end(), states.begin() + (r + 1) * n);
        if (!increments.empty()) std::copy(dw.begin(), dw.end(), increments.begin() + r * nf);
    }
    return ok;
}

PathBundle simulate(const VolatilityModel& model, std::span<const double> x0, const SimulationConfig& config) {
    const std::size_t n = model.nodes();
    require(x0.size() == n, "simulate: initial curve does not match grid");
    for (double v : x0) require(v > 0.0 && std::isfinite(v), "simulate: initial curve must be positive");
    require(config.paths >= 1, "simulate: need at least one path");
    require(config.time.horizon() <= model.grid()->last() + freeze_tol, "simulate: horizon beyond the maturity grid");
    check_refinement(config.time, config.refine);

    PathBundle out;
    out.time = config.time;
    out.nodes = n;
    out.factors = model.factors();
    out.paths = config.paths;
    out.seed = config.seed;
    out.antithetic = config.antithetic;
    out.scheme = config.scheme.value_or(default_scheme(model));
    const std::size_t steps = config.time.steps();
    out.terminal.resize(config.paths * n);
    out.flagged.assign(config.paths, 0);
    if (config.store_states) out.states.resize(config.paths * (steps + 1) * n);
    if (config.store_increments) out.increments.resize(config.paths * steps * out.factors);

    parallel_for(config.paths, config.threads, [&](std::size_t p) {
        Stepper stepper(model, out.scheme);
        std::span<double> x(out.terminal.data() + p * n, n);
        std::copy(x0.begin(), x0.end(), x.begin());
        std::span<double> st, inc;
        if (config.store_states) st = std::span<double>(out.states.data() + p * (steps + 1) * n, (steps + 1) * n);
        if (config.store_increments)
            inc = std::span<double>(out.increments.data() + p * steps * out.factors, steps * out.factors);
        const bool ok =
            simulate_path(stepper, config.time, 0, path_stream(config.seed, p, config.antithetic), x, st, inc,
                          config.refine);
        out.flagged[p] = ok ? 0 : 1;
    });
    for (auto f : out.flagged) out.flagged_count += f;
    if (static_cast<double>(out.flagged_count) > config.max_flagged_fraction * static_cast<double>(config.paths)) {
        std::ostringstream msg;
        msg << "simulate: " << out.flagged_count << " of " << config.paths
            << " paths lost positivity (limit " << config.max_flagged_fraction * 100.0 << "%)";
        throw NumericalError(msg.str());
    }
    return out;
}

std::span<const double> ForwardPathBundle::forwards(std::size_t p) const {
    return std::span<const double>(terminal_forwards).subspan(p * nodes, nodes);
}

std::span<const double> ForwardPathBundle::discounted(std::size_t p) const {
    return std::span<const double>(terminal_discounted).subspan(p * nodes, nodes);
}

double hjm_drift(const GaussianHjm& model, double t, double maturity) {
    double acc = 0.0;
    for (const auto& tau : model.taus()) acc += tau.value(t, maturity) * tau.integral(t, maturity);
    return acc;
}

ForwardPathBundle simulate_forwards(const GaussianHjm& model, const curvespace::ForwardCurve& f0,
                                    const SimulationConfig& config) {
    const auto& g = *model.grid();
    const std::size_t n = g.size();
    const std::size_t nf = model.factors();
    require(f0.values.size() == n, "simulate_forwards: initial curve does not match grid");
    for (double v : f0.values) require(std::isfinite(v), "simulate_forwards: non-finite forward rate");
    require(config.time.horizon() <= g.last() + freeze_tol, "simulate_forwards: horizon beyond the maturity grid");
    check_refinement(config.time, config.refine);

    ForwardPathBundle out;
    out.time = config.time;
    out.nodes = n;
    out.paths = config.paths;
    out.terminal_forwards.resize(config.paths * n);
    out.terminal_discounted.resize(config.paths * n);
    out.log_bank_account.resize(config.paths);
    const auto& time = config.time;

    parallel_for(config.paths, config.threads, [&](std::size_t p) {
        const NoiseStream stream = path_stream(config.seed, p, config.antithetic);
        curvespace::ForwardCurve f = f0;
        std::vector<double> dw(nf);
        std::vector<double> disc(n, 0.0);
        std::vector<char> done(n, 0);
        double log_b = 0.0;
        // nodes already matured at t = 0
        disc[0] = 1.0;
        done[0] = 1;
        for (std::size_t l = 0; l < time.steps(); ++l) {
            const double t = time.time(l);
            const double dt = time.dt(l);
            draw_increments(stream, time, l, dw, config.refine);
            log_b += f.value_at(t) * dt;
            // the node left of t keeps evolving so that f_t(t) interpolates live values
            for (std::size_t i = g.interval_of(t); i < n; ++i) {
                double noise = 0.0;
                for (std::size_t k = 0; k < nf; ++k) noise += model.taus()[k].value(t, g.node(i)) * dw[k];
                f.values[i] += hjm_drift(model, t, g.node(i)) * dt - noise;
            }
            const double t1 = time.time(l + 1);
            f.as_of = t1;
            for (std::size_t i = 1; i < n && g.node(i) <= t1 + freeze_tol; ++i) {
                if (done[i]) continue;
                disc[i] = std::exp(-log_b - curvespace::integrate_forward(f, t1, g.node(i)));
                done[i] = 1;
            }
        }
        const double horizon = time.horizon();
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i]) disc[i] = std::exp(-log_b - curvespace::integrate_forward(f, horizon, g.node(i)));
        std::copy(f.values.begin(), f.values.end(), out.terminal_forwards.begin() + p * n);
        std::copy(disc.begin(), disc.end(), out.terminal_discounted.begin() + p * n);
        out.log_bank_account[p] = log_b;
    });
    return out;
}

}  // namespace hjm::dynamics
