#pragma once

#include <span>
#include <utility>
#include <vector>

#include "hjm/curvespace/grid.hpp"

namespace hjm::curvespace {

/// How forward rates behave between nodes. Forwards built from bond prices
/// by differencing are piecewise constant on [s_i, s_{i+1}); forwards given
/// as node samples of a smooth curve are linearly interpolated.
enum class ForwardInterpolation { piecewise_constant, piecewise_linear };

/// Instantaneous forward curve f_t(s_i) (rate per year), flat beyond s_M.
struct ForwardCurve {
    GridPtr grid;
    std::vector<double> values;
    double as_of = 0.0;
    ForwardInterpolation interpolation = ForwardInterpolation::piecewise_linear;

    double value_at(double s) const;
};

/// Zero-coupon bond prices P_t(s_i).
struct BondCurve {
    GridPtr grid;
    std::vector<double> values;
    double as_of = 0.0;
};

/// Discounted bond prices P~_t(s_i) = P_t(s_i) / B_t. Nodes with s_i <= as_of
/// hold their frozen values 1 / B_{s_i}.
struct DiscountedCurve {
    GridPtr grid;
    std::vector<double> values;
    double as_of = 0.0;
};

/// Log-linear interpolation of a strictly positive node curve.
double log_linear_at(const MaturityGrid& grid, std::span<const double> values, double s);

/// int_a^b f(u) du, exact for the curve's interpolant (signed when b < a).
double integrate_forward(const ForwardCurve& f, double a, double b);

/// P_t(s_i) = exp(-int_t^{s_i} f). For nodes below t the integral is signed,
/// which continues the formula rather than reproducing the frozen convention.
BondCurve bonds_from_forwards(const ForwardCurve& f, double t);

/// f(s_i) = -(log P(s_{i+1}) - log P(s_i)) / (s_{i+1} - s_i), last node flat.
ForwardCurve forwards_from_bonds(const BondCurve& p);

/// y_t(T) = (T - t)^{-1} int_t^T f.
double yield(const ForwardCurve& f, double t, double maturity);

struct NumeraireSplit {
    double bank_account = 1.0;  // B_t
    BondCurve bonds;            // P_t(s_i) = P~_t(s_i) / P~_t(t)
};

/// Recovers B_t = 1 / P~_t(t) and the bond curve from the discounted curve.
/// For s <= t the result is B_s^{-1} B_t, the matured-bond convention.
NumeraireSplit split_numeraire(const DiscountedCurve& pt);

/// Discounted curve at time 0 from an initial forward curve (B_0 = 1).
DiscountedCurve initial_discounted_curve(const ForwardCurve& f0);

/// Flat forward curve.
ForwardCurve flat_forwards(GridPtr grid, double rate);

}  // namespace hjm::curvespace
