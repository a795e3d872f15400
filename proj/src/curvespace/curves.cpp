#include "hjm/curvespace/curves.hpp"

#include <cmath>

#include "hjm/core/error.hpp"

namespace hjm::curvespace {
namespace {

void check_curve(const GridPtr& grid, std::size_t n, const char* what) {
    require(grid != nullptr, std::string(what) + ": curve has no grid");
    require(n == grid->size(), std::string(what) + ": curve size does not match grid");
}

// int_0^s f for the interpolant of f.
double forward_primitive(const ForwardCurve& f, double s) {
    const MaturityGrid& g = *f.grid;
    const std::size_t n = g.size();
    double acc = 0.0;
    std::size_t j = 0;
    for (; j + 1 < n && g.node(j + 1) <= s; ++j) {
        const double h = g.node(j + 1) - g.node(j);
        acc += f.interpolation == ForwardInterpolation::piecewise_constant
                   ? f.values[j] * h
                   : 0.5 * (f.values[j] + f.values[j + 1]) * h;
    }
    const double rest = s - g.node(j);
    if (rest <= 0.0) return acc;
    if (j + 1 >= n) return acc + f.values[n - 1] * rest;
    if (f.interpolation == ForwardInterpolation::piecewise_constant) return acc + f.values[j] * rest;
    const double h = g.node(j + 1) - g.node(j);
    return acc + f.values[j] * rest + 0.5 * (f.values[j + 1] - f.values[j]) * rest * rest / h;
}

}  // namespace

double ForwardCurve::value_at(double s) const {
    const MaturityGrid& g = *grid;
    if (s >= g.last()) return values.back();
    if (s <= 0.0) return values.front();
    const std::size_t j = g.interval_of(s);
    if (interpolation == ForwardInterpolation::piecewise_constant) return values[j];
    const double theta = (s - g.node(j)) / (g.node(j + 1) - g.node(j));
    return (1.0 - theta) * values[j] + theta * values[j + 1];
}

double log_linear_at(const MaturityGrid& grid, std::span<const double> values, double s) {
    if (auto idx = grid.find_node(s, 0.0)) return values[*idx];
    if (s >= grid.last()) {
        // flat forward beyond the last node
        const std::size_t n = grid.size();
        const double slope = std::log(values[n - 1] / values[n - 2]) / (grid.node(n - 1) - grid.node(n - 2));
        return values[n - 1] * std::exp(slope * (s - grid.last()));
    }
    const std::size_t j = grid.interval_of(s);
    const double theta = (s - grid.node(j)) / (grid.node(j + 1) - grid.node(j));
    return std::exp((1.0 - theta) * std::log(values[j]) + theta * std::log(values[j + 1]));
}

double integrate_forward(const ForwardCurve& f, double a, double b) {
    check_curve(f.grid, f.values.size(), "integrate_forward");
    return forward_primitive(f, b) - forward_primitive(f, a);
}

BondCurve bonds_from_forwards(const ForwardCurve& f, double t) {
    check_curve(f.grid, f.values.size(), "bonds_from_forwards");
    const MaturityGrid& g = *f.grid;
    require(t >= 0.0 && t <= g.last(), "bonds_from_forwards: t outside the maturity grid");
    for (double v : f.values) require(std::isfinite(v), "bonds_from_forwards: non-finite forward rate");
    BondCurve out{f.grid, std::vector<double>(g.size()), t};
    const double base = forward_primitive(f, t);
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.values[i] = g.node(i) == t ? 1.0 : std::exp(-(forward_primitive(f, g.node(i)) - base));
    }
    return out;
}

ForwardCurve forwards_from_bonds(const BondCurve& p) {
    check_curve(p.grid, p.values.size(), "forwards_from_bonds");
    const MaturityGrid& g = *p.grid;
    for (double v : p.values) require(v > 0.0 && std::isfinite(v), "forwards_from_bonds: non-positive bond price");
    ForwardCurve out{p.grid, std::vector<double>(g.size()), p.as_of, ForwardInterpolation::piecewise_constant};
    for (std::size_t i = 0; i + 1 < g.size(); ++i)
        out.values[i] = -(std::log(p.values[i + 1]) - std::log(p.values[i])) / (g.node(i + 1) - g.node(i));
    out.values.back() = out.values[g.size() - 2];
    return out;
}

double yield(const ForwardCurve& f, double t, double maturity) {
    require(maturity > t, "yield: maturity must exceed valuation time");
    return integrate_forward(f, t, maturity) / (maturity - t);
}

NumeraireSplit split_numeraire(const DiscountedCurve& pt) {
    check_curve(pt.grid, pt.values.size(), "split_numeraire");
    const MaturityGrid& g = *pt.grid;
    double at_t;
    if (auto idx = g.find_node(pt.as_of, 0.0)) {
        at_t = pt.values[*idx];
    } else {
        const std::size_t j = g.interval_of(pt.as_of);
        require(pt.values[j] > 0.0 && pt.values[j + 1] > 0.0,
                "split_numeraire: discounted curve must be positive around t");
        at_t = log_linear_at(g, pt.values, pt.as_of);
    }
    require(at_t > 0.0 && std::isfinite(at_t), "split_numeraire: P~_t(t) must be positive");
    NumeraireSplit out{1.0 / at_t, BondCurve{pt.grid, std::vector<double>(g.size()), pt.as_of}};
    for (std::size_t i = 0; i < g.size(); ++i) out.bonds.values[i] = pt.values[i] / at_t;
    if (auto idx = g.find_node(pt.as_of, 0.0)) out.bonds.values[*idx] = 1.0;
    return out;
}

DiscountedCurve initial_discounted_curve(const ForwardCurve& f0) {
    BondCurve p = bonds_from_forwards(f0, 0.0);
    return DiscountedCurve{p.grid, std::move(p.values), 0.0};
}

ForwardCurve flat_forwards(GridPtr grid, double rate) {
    const std::size_t n = grid->size();
    return ForwardCurve{std::move(grid), std::vector<double>(n, rate), 0.0, ForwardInterpolation::piecewise_linear};
}

}  // namespace hjm::curvespace
