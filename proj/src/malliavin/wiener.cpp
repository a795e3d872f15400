#include "hjm/malliavin/wiener.hpp"

#include <cmath>

#include "hjm/core/error.hpp"
#include "hjm/dynamics/rng.hpp"
#include "hjm/dynamics/simulate.hpp"

namespace hjm::malliavin {
namespace {

double brownian_at(std::span<const double> dw, std::size_t factors, std::size_t driver, std::size_t steps) {
    double w = 0.0;
    for (std::size_t l = 0; l < steps; ++l) w += dw[l * factors + driver];
    return w;
}

void check_increments(const WienerFunctional& x, const dynamics::TimeGrid& time, std::span<const double> dw) {
    require(dw.size() == time.steps() * x.factors(), "Wiener functional: increments do not match the time grid");
}

}  // namespace

bool WienerFunctional::exact_integrand(const dynamics::TimeGrid&, std::span<const double>, std::size_t,
                                       std::span<double>) const {
    return false;
}

double LinearFunctional::value(const dynamics::TimeGrid& time, std::span<const double> dw) const {
    check_increments(*this, time, dw);
    std::vector<double> h(factors());
    double acc = 0.0;
    for (std::size_t l = 0; l < time.steps(); ++l) {
        h_(time.time(l), h);
        for (std::size_t k = 0; k < factors(); ++k) acc += h[k] * dw[l * factors() + k];
    }
    return acc;
}

void LinearFunctional::derivative(const dynamics::TimeGrid& time, std::span<const double>, std::size_t l,
                                  std::span<double> out) const {
    h_(time.time(l), out);
}

bool LinearFunctional::exact_integrand(const dynamics::TimeGrid& time, std::span<const double>, std::size_t l,
                                       std::span<double> out) const {
    h_(time.time(l), out);
    return true;
}

BrownianPower::BrownianPower(std::size_t factors, std::size_t driver, int power)
    : WienerFunctional(factors), driver_(driver), power_(power) {
    require(driver < factors, "BrownianPower: driver index out of range");
    require(power == 1 || power == 2, "BrownianPower: power must be 1 or 2");
}

double BrownianPower::value(const dynamics::TimeGrid& time, std::span<const double> dw) const {
    check_increments(*this, time, dw);
    const double w = brownian_at(dw, factors(), driver_, time.steps());
    return power_ == 1 ? w : w * w;
}

void BrownianPower::derivative(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t,
                               std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    out[driver_] = power_ == 1 ? 1.0 : 2.0 * brownian_at(dw, factors(), driver_, time.steps());
}

std::optional<double> BrownianPower::expectation(const dynamics::TimeGrid& time) const {
    return power_ == 1 ? 0.0 : time.horizon();
}

bool BrownianPower::exact_integrand(const dynamics::TimeGrid&, std::span<const double> dw, std::size_t l,
                                    std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    out[driver_] = power_ == 1 ? 1.0 : 2.0 * brownian_at(dw, factors(), driver_, l);
    return true;
}

ExponentialMartingale::ExponentialMartingale(std::vector<double> h)
    : WienerFunctional(h.size()), h_(std::move(h)) {
    require(!h_.empty(), "ExponentialMartingale: need at least one factor");
    for (double v : h_) h2_ += v * v;
}

double ExponentialMartingale::running(const dynamics::TimeGrid& time, std::span<const double> dw,
                                      std::size_t l) const {
    double e = 0.0;
    for (std::size_t m = 0; m < l; ++m)
        for (std::size_t k = 0; k < factors(); ++k) e += h_[k] * dw[m * factors() + k];
    return std::exp(e - 0.5 * h2_ * time.time(l));
}

double ExponentialMartingale::value(const dynamics::TimeGrid& time, std::span<const double> dw) const {
    check_increments(*this, time, dw);
    return running(time, dw, time.steps());
}

void ExponentialMartingale::derivative(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t,
                                       std::span<double> out) const {
    const double x = value(time, dw);
    for (std::size_t k = 0; k < factors(); ++k) out[k] = x * h_[k];
}

bool ExponentialMartingale::exact_integrand(const dynamics::TimeGrid& time, std::span<const double> dw,
                                            std::size_t l, std::span<double> out) const {
    const double m = running(time, dw, l);
    for (std::size_t k = 0; k < factors(); ++k) out[k] = m * h_[k];
    return true;
}

void ConstantFunctional::derivative(const dynamics::TimeGrid&, std::span<const double>, std::size_t,
                                    std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
}

std::vector<double> wiener_increments(const dynamics::TimeGrid& time, std::size_t factors, std::uint64_t seed,
                                      std::size_t path, bool antithetic) {
    std::vector<double> dw(time.steps() * factors);
    const auto stream = dynamics::path_stream(seed, path, antithetic);
    for (std::size_t l = 0; l < time.steps(); ++l)
        dynamics::draw_increments(stream, time, l, std::span<double>(dw).subspan(l * factors, factors));
    return dw;
}

WienerIntegrand nested_integrand(const WienerFunctional& x, const dynamics::TimeGrid& time,
                                 std::span<const double> dw, std::size_t l, std::size_t inner_paths,
                                 std::uint64_t seed, std::uint64_t outer, bool antithetic) {
    require(inner_paths >= 2, "nested integrand: need at least two inner paths");
    require(l < time.steps(), "nested integrand: step out of range");
    check_increments(x, time, dw);
    const std::size_t nf = x.factors();
    std::vector<double> samples(inner_paths * nf);
    std::vector<double> full(dw.begin(), dw.end());
    for (std::size_t i = 0; i < inner_paths; ++i) {
        const auto stream = dynamics::inner_stream(seed, outer, l, i, antithetic);
        for (std::size_t m = l; m < time.steps(); ++m)
            dynamics::draw_increments(stream, time, m, std::span<double>(full).subspan(m * nf, nf));
        x.derivative(time, full, l, std::span<double>(samples).subspan(i * nf, nf));
    }
    WienerIntegrand out;
    for (std::size_t k = 0; k < nf; ++k)
        out.components.push_back(dynamics::mean_se(dynamics::strided(samples, nf, k, inner_paths), antithetic));
    return out;
}

Reconstruction reconstruct(const WienerFunctional& x, const dynamics::TimeGrid& time, std::size_t paths,
                           std::uint64_t seed, IntegrandSource source, std::size_t inner_paths) {
    require(paths >= 2, "reconstruct: need at least two paths");
    const std::size_t nf = x.factors();
    std::vector<double> values(paths), integrals(paths);
    dynamics::parallel_for(paths, 0, [&](std::size_t p) {
        const auto dw = wiener_increments(time, nf, seed, p);
        values[p] = x.value(time, dw);
        std::vector<double> alpha(nf);
        double acc = 0.0;
        for (std::size_t l = 0; l < time.steps(); ++l) {
            if (source == IntegrandSource::exact) {
                require(x.exact_integrand(time, dw, l, alpha), "reconstruct: functional has no closed-form integrand");
            } else {
                const auto est = nested_integrand(x, time, dw, l, inner_paths, seed, p);
                for (std::size_t k = 0; k < nf; ++k) alpha[k] = est.components[k].mean;
            }
            for (std::size_t k = 0; k < nf; ++k) acc += alpha[k] * dw[l * nf + k];
        }
        integrals[p] = acc;
    });
    Reconstruction out;
    const auto vs = dynamics::mean_se(values);
    out.mean_value = vs.mean;
    out.sd_value = vs.sd;
    const double ex = x.expectation(time).value_or(vs.mean);
    out.residuals.resize(paths);
    std::vector<double> sq(paths);
    for (std::size_t p = 0; p < paths; ++p) {
        out.residuals[p] = values[p] - ex - integrals[p];
        sq[p] = out.residuals[p] * out.residuals[p];
    }
    out.rms_residual = std::sqrt(dynamics::pairwise_sum(sq) / static_cast<double>(paths));
    out.relative_rms = out.sd_value > 0.0 ? out.rms_residual / out.sd_value : out.rms_residual;
    return out;
}

IbpCheck integration_by_parts_check(const WienerFunctional& x, const AdaptedProcess& beta,
                                    const dynamics::TimeGrid& time, std::size_t paths, std::uint64_t seed) {
    require(paths >= 2, "integration by parts: need at least two paths");
    const std::size_t nf = x.factors();
    std::vector<double> lhs(paths), rhs(paths), diff(paths);
    dynamics::parallel_for(paths, 0, [&](std::size_t p) {
        const auto dw = wiener_increments(time, nf, seed, p);
        const double value = x.value(time, dw);
        std::vector<double> d(nf), b(nf);
        double left = 0.0, stoch = 0.0;
        for (std::size_t l = 0; l < time.steps(); ++l) {
            beta(l, std::span<const double>(dw).subspan(0, l * nf), b);
            x.derivative(time, dw, l, d);
            for (std::size_t k = 0; k < nf; ++k) {
                left += d[k] * b[k] * time.dt(l);
                stoch += b[k] * dw[l * nf + k];
            }
        }
        lhs[p] = left;
        rhs[p] = value * stoch;
        diff[p] = left - rhs[p];
    });
    IbpCheck out{dynamics::mean_se(lhs), dynamics::mean_se(rhs), dynamics::mean_se(diff), false};
    out.pass = std::abs(out.diff.mean) <= 3.0 * out.diff.se || std::abs(out.diff.mean) <= 1e-12;
    return out;
}

}  // namespace hjm::malliavin
