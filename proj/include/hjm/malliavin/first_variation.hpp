#pragma once

#include <span>
#include <vector>

#include "hjm/dynamics/simulate.hpp"
#include "hjm/dynamics/volatility.hpp"

namespace hjm::malliavin {

using dynamics::Matrix;
using dynamics::Vector;

/// One stored trajectory: states at t_0..t_L and the increments of every step.
struct PathView {
    const dynamics::TimeGrid* time = nullptr;
    std::span<const double> states;      // (L + 1) x nodes
    std::span<const double> increments;  // L x factors
    std::size_t nodes = 0;
    std::size_t factors = 0;

    std::span<const double> state(std::size_t l) const { return states.subspan(l * nodes, nodes); }
    std::span<const double> increment(std::size_t l) const { return increments.subspan(l * factors, factors); }
    std::size_t steps() const { return time->steps(); }
};

/// View of path p of a bundle simulated with stored states and increments.
PathView view(const dynamics::PathBundle& bundle, std::size_t p);

/// Derivative of one step of the scheme with respect to the pre-step state.
/// For the log-Euler map x' = x exp(h dW - |h|^2 dt / 2):
///   dx' = e dx + x' ((dh) (dW - h dt))
/// and for the Euler map x' = x (1 + h dW):
///   dx' = (1 + h dW) dx + x ((dh) dW),
/// the latter being Y + (grad sigma . Y) dW.
class StepLinearization {
public:
    StepLinearization(const dynamics::VolatilityModel& model, dynamics::Scheme scheme);

    /// Prepares the step from state x at t with increment dw.
    void set(double t, double dt, std::span<const double> x, std::span<const double> dw);
    /// Same, reusing the loadings h(t, x) and the post-step state of the
    /// forward pass (the step multiplier is x_next / x on live nodes).
    void set(double t, double dt, std::span<const double> x, std::span<const double> x_next,
             std::span<const double> h, std::span<const double> dw);

    /// Tangent of one column: out = J dx.
    void tangent(std::span<const double> dx, std::span<double> out);
    /// Adjoint: out = J^T xbar_next.
    void adjoint(std::span<const double> xbar_next, std::span<double> out);

private:
    const dynamics::VolatilityModel* model_;
    dynamics::Scheme scheme_;
    double t_ = 0.0;
    std::size_t live_ = 0;
    std::vector<double> x_, h_, g_, mult_, scale_, dh_, hbar_;
};

/// Forward propagation of the columns of `columns` (nodes x c) along the path
/// from step `from` to step `to`.
Matrix propagate_tangent(const dynamics::VolatilityModel& model, dynamics::Scheme scheme, const PathView& path,
                         std::size_t from, std::size_t to, Matrix columns);

/// Y_{t_from, t_to}^T v.
Vector propagate_adjoint(const dynamics::VolatilityModel& model, dynamics::Scheme scheme, const PathView& path,
                         std::size_t from, std::size_t to, Vector v);

/// First-variation operator Y_{t_from, t_to} (nodes x nodes); Y(t, t) = I.
Matrix first_variation(const dynamics::VolatilityModel& model, dynamics::Scheme scheme, const PathView& path,
                       std::size_t from, std::size_t to);

/// Picard iterates Y^0 = I (or the given columns), and
///   Y^{n+1}_{l+1} = Y^{n+1}_l + (grad sigma(t_l, x_l) Y^n_l) dW_l,
/// evaluated at t_to. Entry n of the result is Y^n applied to `columns`.
std::vector<Matrix> picard_first_variation(const dynamics::VolatilityModel& model, const PathView& path,
                                           std::size_t from, std::size_t to, const Matrix& columns,
                                           std::size_t iterations);

/// D_{t_l} P~_T = Y_{t_l, T} sigma(t_l, P~_{t_l}) (nodes x factors).
Matrix malliavin_derivative_curve(const dynamics::VolatilityModel& model, dynamics::Scheme scheme,
                                  const PathView& path, std::size_t l);

}  // namespace hjm::malliavin
