#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hjm::curvespace {

/// Positive weight function with a printable description.
struct Weight {
    std::function<double(double)> fn;
    std::string label;

    double operator()(double s) const { return fn(s); }
};

/// v(s) = (1 + s)^power.
Weight power_weight(double power);

struct WeightConstants {
    double c_v = 0.0;   // int_0^inf 1 / v
    double c_w = 0.0;   // int_0^inf (1 + u^2) / w(u)
    double c_vw = 0.0;  // int_0^inf int_0^s v(u) / w(s) du ds
};

/// Quadrature of the three embedding constants. Throws PreconditionError when
/// one of the integrals does not settle (divergent weight configuration).
WeightConstants weight_constants(const Weight& v, const Weight& w);

/// Discrete maturity axis s_0 = 0 < s_1 < ... < s_M with the Sobolev weights
/// attached. Curve values beyond s_M are pinned to zero at the ghost node
/// s_M + ghost_tail (and, for second differences, at s_M + 2 ghost_tail).
class MaturityGrid {
public:
    MaturityGrid(std::vector<double> nodes, Weight v, Weight w, double ghost_tail = 10.0);

    /// nodes 0, h, 2h, ..., s_max with h = s_max / intervals.
    static MaturityGrid uniform(double s_max, std::size_t intervals, Weight v = power_weight(2.0),
                                Weight w = power_weight(5.0), double ghost_tail = 10.0);

    std::size_t size() const { return nodes_.size(); }
    double node(std::size_t i) const { return nodes_[i]; }
    std::span<const double> nodes() const { return nodes_; }
    double last() const { return nodes_.back(); }
    double ghost_tail() const { return ghost_tail_; }

    const Weight& v() const { return v_; }
    const Weight& w() const { return w_; }
    const WeightConstants& constants() const { return constants_; }

    /// Index of the node equal to s (within tol), if any.
    std::optional<std::size_t> find_node(double s, double tol = 1e-9) const;
    /// Same, throwing PreconditionError for off-grid maturities.
    std::size_t require_node(double s, double tol = 1e-9) const;
    /// j with s_j <= t < s_{j+1}; M - 1 for t >= s_M (clamped), 0 for t < 0.
    std::size_t interval_of(double t) const;
    /// Nodes with s_i <= t are matured.
    std::size_t first_live_node(double t) const;

    /// Interval widths including the ghost interval (size() entries).
    std::span<const double> widths() const { return widths_; }
    std::span<const double> inverse_widths() const { return inv_widths_; }
    /// v at interval midpoints times the interval width (size() entries).
    std::span<const double> v_mass() const { return v_mass_; }

private:
    std::vector<double> nodes_;
    Weight v_;
    Weight w_;
    double ghost_tail_;
    WeightConstants constants_;
    std::vector<double> widths_;
    std::vector<double> inv_widths_;
    std::vector<double> v_mass_;
};

using GridPtr = std::shared_ptr<const MaturityGrid>;

inline GridPtr make_grid(MaturityGrid grid) { return std::make_shared<const MaturityGrid>(std::move(grid)); }

}  // namespace hjm::curvespace
