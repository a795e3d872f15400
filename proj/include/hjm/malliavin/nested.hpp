#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hjm/dynamics/parallel.hpp"
#include "hjm/malliavin/first_variation.hpp"

namespace hjm::malliavin {

/// Scalar functional of the terminal discounted curve with a (sub)gradient.
class CurveFunctional {
public:
    virtual ~CurveFunctional() = default;
    virtual double value(std::span<const double> x) const = 0;
    virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;
};

struct NestedConfig {
    std::size_t inner_paths = 512;
    std::uint64_t seed = 0;
    std::uint64_t outer = 0;
    bool antithetic = true;
    unsigned threads = 1;
};

/// Conditional expectations at (t_l, x) estimated from inner paths.
struct NestedEstimate {
    Vector phi;        // E{Y_{t,T}^T grad X | F_t}, one entry per node
    Vector phi_se;
    Vector alpha;      // sigma(t, x)^T phi, one entry per factor
    Vector alpha_se;
    dynamics::MeanSe value;  // E{X | F_t}
};

/// Runs inner paths from state x at step l to the horizon and averages the
/// adjoint Y^T grad X(P~_T) (the gradient pulled back to time t_l) together
/// with X itself. Inner noise depends only on (seed, outer, l, inner id).
NestedEstimate conditional_gradient(const dynamics::VolatilityModel& model, dynamics::Scheme scheme,
                                    const dynamics::TimeGrid& time, std::size_t l, std::span<const double> x,
                                    const CurveFunctional& functional, const NestedConfig& config);

/// alpha_t = E{D_t X | F_t} for a curve functional, with standard errors.
inline NestedEstimate clark_ocone_integrand(const dynamics::VolatilityModel& model, dynamics::Scheme scheme,
                                            const dynamics::TimeGrid& time, std::size_t l,
                                            std::span<const double> x, const CurveFunctional& functional,
                                            const NestedConfig& config) {
    return conditional_gradient(model, scheme, time, l, x, functional, config);
}

}  // namespace hjm::malliavin
