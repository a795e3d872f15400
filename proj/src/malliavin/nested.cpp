#include "hjm/malliavin/nested.hpp"

#include <cmath>

#include "hjm/core/error.hpp"

namespace hjm::malliavin {

NestedEstimate conditional_gradient(const dynamics::VolatilityModel& model, dynamics::Scheme scheme,
                                    const dynamics::TimeGrid& time, std::size_t l, std::span<const double> x,
                                    const CurveFunctional& functional, const NestedConfig& config) {
    require(config.inner_paths >= 2, "nested estimate: need at least two inner paths");
    require(!config.antithetic || config.inner_paths % 2 == 0, "nested estimate: antithetic needs an even count");
    require(l <= time.steps(), "nested estimate: step out of range");
    const std::size_t n = model.nodes(), nf = model.factors();
    require(x.size() == n, "nested estimate: state does not match grid");
    const std::size_t steps = time.steps();
    const std::size_t inner = config.inner_paths;

    std::vector<double> values(inner);
    std::vector<double> pulled(inner * n);

    const std::size_t span_steps = steps - l;
    dynamics::parallel_for(inner, config.threads, [&](std::size_t i) {
        // forward pass keeps states and loadings so the backward pass only
        // differentiates the volatility
        thread_local std::vector<double> states, loadings, incs;
        states.resize((span_steps + 1) * n);
        loadings.resize(span_steps * n * nf);
        incs.resize(span_steps * nf);
        dynamics::Stepper stepper(model, scheme);
        std::copy(x.begin(), x.end(), states.begin());
        const auto stream = dynamics::inner_stream(config.seed, config.outer, l, i, config.antithetic);
        for (std::size_t r = 0; r < span_steps; ++r) {
            const std::size_t m = l + r;
            std::span<double> dw(incs.data() + r * nf, nf);
            dynamics::draw_increments(stream, time, m, dw);
            std::span<double> next(states.data() + (r + 1) * n, n);
            std::copy(states.begin() + static_cast<std::ptrdiff_t>(r * n),
                      states.begin() + static_cast<std::ptrdiff_t>((r + 1) * n), next.begin());
            stepper.step(time.time(m), time.dt(m), next, dw);
            const auto h = stepper.loadings();
            std::copy(h.begin(), h.end(), loadings.begin() + static_cast<std::ptrdiff_t>(r * n * nf));
        }
        std::span<const double> terminal(states.data() + span_steps * n, n);
        values[i] = functional.value(terminal);
        std::vector<double> xbar(n), prev(n);
        functional.gradient(terminal, xbar);
        for (double v : xbar)
            if (!std::isfinite(v)) throw NumericalError("nested estimate: non-finite payout gradient");
        StepLinearization lin(model, scheme);
        for (std::size_t r = span_steps; r-- > 0;) {
            const std::size_t m = l + r;
            lin.set(time.time(m), time.dt(m), std::span<const double>(states.data() + r * n, n),
                    std::span<const double>(states.data() + (r + 1) * n, n),
                    std::span<const double>(loadings.data() + r * n * nf, n * nf),
                    std::span<const double>(incs.data() + r * nf, nf));
            lin.adjoint(xbar, prev);
            std::swap(xbar, prev);
        }
        std::copy(xbar.begin(), xbar.end(), pulled.begin() + static_cast<std::ptrdiff_t>(i * n));
    });

    NestedEstimate out;
    out.value = dynamics::mean_se(values, config.antithetic);
    out.phi.resize(n);
    out.phi_se.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto ms = dynamics::mean_se(dynamics::strided(pulled, n, j, inner), config.antithetic);
        out.phi[j] = ms.mean;
        out.phi_se[j] = ms.se;
    }
    const Matrix sigma = model.sigma(time.time(l), x);
    out.alpha.resize(nf);
    out.alpha_se.resize(nf);
    std::vector<double> a(inner);
    for (std::size_t k = 0; k < nf; ++k) {
        for (std::size_t i = 0; i < inner; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += sigma(j, k) * pulled[i * n + j];
            a[i] = acc;
        }
        const auto ms = dynamics::mean_se(a, config.antithetic);
        out.alpha[k] = ms.mean;
        out.alpha_se[k] = ms.se;
    }
    return out;
}

}  // namespace hjm::malliavin
