#include "hjm/curvespace/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hjm/core/error.hpp"
#include "hjm/curvespace/quadrature.hpp"

namespace hjm::curvespace {

Weight power_weight(double power) {
    std::ostringstream label;
    label << "(1+s)^" << power;
    return Weight{[power](double s) { return std::pow(1.0 + s, power); }, label.str()};
}

WeightConstants weight_constants(const Weight& v, const Weight& w) {
    const auto cv = integrate_half_line([&](double s) { return 1.0 / v(s); });
    require(cv.converged, "weight_constants: C_v = int 1/v diverges for v = " + v.label);

    const auto cw = integrate_half_line([&](double u) { return (1.0 + u * u) / w(u); });
    require(cw.converged, "weight_constants: C_w = int (1+u^2)/w diverges for w = " + w.label);

    // Inner primitive V(s) = int_0^s v, accumulated panel by panel so each
    // evaluation only integrates from the current panel start.
    double panel_lo = 0.0;
    double v_at_lo = 0.0;
    auto integrand = [&](double s) { return (v_at_lo + integrate(v.fn, panel_lo, s, 1e-12)) / w(s); };
    double total = 0.0;
    double hi = 1.0;
    int quiet = 0;
    bool converged = false;
    for (int p = 0; p < 64 && !converged; ++p) {
        const double piece = integrate(integrand, panel_lo, hi, 1e-12);
        total += piece;
        if (!std::isfinite(total)) break;
        quiet = std::abs(piece) <= 1e-12 * std::abs(total) ? quiet + 1 : 0;
        converged = quiet == 2;
        v_at_lo += integrate(v.fn, panel_lo, hi, 1e-13);
        panel_lo = hi;
        hi *= 2.0;
    }
    require(converged, "weight_constants: C_vw diverges for v = " + v.label + ", w = " + w.label);
    return WeightConstants{cv.value, cw.value, total};
}

MaturityGrid::MaturityGrid(std::vector<double> nodes, Weight v, Weight w, double ghost_tail)
    : nodes_(std::move(nodes)), v_(std::move(v)), w_(std::move(w)), ghost_tail_(ghost_tail) {
    require(nodes_.size() >= 3, "MaturityGrid: need s_0 = 0 and at least two further nodes");
    require(nodes_.front() == 0.0, "MaturityGrid: first node must be 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        require(nodes_[i] > nodes_[i - 1], "MaturityGrid: nodes must be strictly increasing");
    require(ghost_tail_ > 0.0, "MaturityGrid: ghost tail must be positive");
    for (double s : nodes_) require(v_(s) > 0.0 && w_(s) > 0.0, "MaturityGrid: weights must be positive");

    constants_ = weight_constants(v_, w_);

    const std::size_t n = nodes_.size();
    widths_.resize(n);
    inv_widths_.resize(n);
    v_mass_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double lo = nodes_[j];
        const double hi = j + 1 < n ? nodes_[j + 1] : lo + ghost_tail_;
        widths_[j] = hi - lo;
        inv_widths_[j] = 1.0 / widths_[j];
        v_mass_[j] = v_(0.5 * (lo + hi)) * widths_[j];
    }
}

MaturityGrid MaturityGrid::uniform(double s_max, std::size_t intervals, Weight v, Weight w, double ghost_tail) {
    require(intervals >= 2 && s_max > 0.0, "MaturityGrid::uniform: need s_max > 0 and >= 2 intervals");
    std::vector<double> nodes(intervals + 1);
    const double h = s_max / static_cast<double>(intervals);
    for (std::size_t i = 0; i <= intervals; ++i) nodes[i] = h * static_cast<double>(i);
    nodes.back() = s_max;
    return MaturityGrid(std::move(nodes), std::move(v), std::move(w), ghost_tail);
}

std::optional<std::size_t> MaturityGrid::find_node(double s, double tol) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), s - tol);
    if (it != nodes_.end() && std::abs(*it - s) <= tol)
        return static_cast<std::size_t>(it - nodes_.begin());
    return std::nullopt;
}

std::size_t MaturityGrid::require_node(double s, double tol) const {
    auto idx = find_node(s, tol);
    if (!idx) {
        std::ostringstream msg;
        msg << "maturity " << s << " is not a grid node";
        throw PreconditionError(msg.str());
    }
    return *idx;
}

std::size_t MaturityGrid::interval_of(double t) const {
    if (t <= 0.0) return 0;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    const auto j = static_cast<std::size_t>(it - nodes_.begin());
    return std::min(j == 0 ? 0 : j - 1, nodes_.size() - 2);
}

std::size_t MaturityGrid::first_live_node(double t) const {
    return static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), t) - nodes_.begin());
}

}  // namespace hjm::curvespace
