#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hjm/curvespace/grid.hpp"

namespace hjm::dynamics {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Nodes with s_i <= t + freeze_tol count as matured.
inline constexpr double freeze_tol = 1e-9;

/// First node with s_i > t (beyond the freeze tolerance).
std::size_t first_live_node(const curvespace::MaturityGrid& grid, double t);

/// Proportional volatility sigma(t, x)_ik = x_i h_ik(t, x) on a maturity grid
/// with N factors. Rows of matured nodes (s_i <= t) are zero.
class VolatilityModel {
public:
    VolatilityModel(curvespace::GridPtr grid, std::size_t factors);
    virtual ~VolatilityModel() = default;

    virtual std::string kind() const = 0;
    /// False when h does not depend on the state (Gaussian models).
    virtual bool state_dependent() const = 0;

    const curvespace::GridPtr& grid() const { return grid_; }
    std::size_t nodes() const { return grid_->size(); }
    std::size_t factors() const { return factors_; }

    /// h(t, x), nodes x factors, row-major.
    virtual void relative_loadings(double t, std::span<const double> x, std::span<double> h) const = 0;

    /// dh = (dh/dx) dx. The default is a central difference with step
    /// 1e-5 * |x|, suitable for models without an analytic derivative.
    virtual void relative_loadings_tangent(double t, std::span<const double> x, std::span<const double> dx,
                                           std::span<double> dh) const;

    /// xbar += (dh/dx)^T hbar. The default applies the central difference
    /// node by node.
    virtual void relative_loadings_adjoint(double t, std::span<const double> x, std::span<const double> hbar,
                                           std::span<double> xbar) const;

    /// sigma(t, x), nodes x factors.
    Matrix sigma(double t, std::span<const double> x) const;
    /// (grad sigma(t, x)) dx, nodes x factors.
    Matrix sigma_tangent(double t, std::span<const double> x, std::span<const double> dx) const;

    void fd_loadings_tangent(double t, std::span<const double> x, std::span<const double> dx,
                             std::span<double> dh) const;

protected:
    void check_state(std::span<const double> x) const;

private:
    curvespace::GridPtr grid_;
    std::size_t factors_;
};

using ModelPtr = std::shared_ptr<const VolatilityModel>;

/// Deterministic forward-rate volatility tau_t(u) of one factor.
struct TauSpec {
    enum class Kind { constant, exponential, piecewise };

    Kind kind = Kind::constant;
    double level = 0.0;
    double decay = 0.0;            // exponential: tau = level * exp(-decay (u - t))
    std::vector<double> breaks;    // piecewise: value[j] on [breaks[j], breaks[j+1]), last one flat
    std::vector<double> values;

    static TauSpec constant(double level);
    static TauSpec exponential(double level, double decay);
    static TauSpec piecewise(std::vector<double> breaks, std::vector<double> values);

    double value(double t, double u) const;
    /// int_t^s tau_t(u) du (signed, so negative for s < t).
    double integral(double t, double s) const;
};

/// Finite-factor Gaussian HJM: forward-rate volatility tau deterministic, so
/// sigma_ik = x_i int_t^{s_i} tau^k_t(u) du.
class GaussianHjm final : public VolatilityModel {
public:
    GaussianHjm(curvespace::GridPtr grid, std::vector<TauSpec> taus);

    std::string kind() const override { return "gaussian_hjm"; }
    bool state_dependent() const override { return false; }
    const std::vector<TauSpec>& taus() const { return taus_; }

    void relative_loadings(double t, std::span<const double> x, std::span<double> h) const override;
    void relative_loadings_tangent(double t, std::span<const double> x, std::span<const double> dx,
                                   std::span<double> dh) const override;
    void relative_loadings_adjoint(double t, std::span<const double> x, std::span<const double> hbar,
                                   std::span<double> xbar) const override;

    /// a^k(t, s) = int_t^s tau^k.
    double bond_loading(std::size_t k, double t, double s) const { return taus_[k].integral(t, s); }

private:
    std::vector<TauSpec> taus_;
};

/// Truncated factor structure: scales lambda_k = lambda_1 k^{-p} and an
/// orthonormal maturity basis psi_k (cosines, Gram-Schmidt under the grid
/// trapezoid rule, psi_1 constant).
struct FactorLoadings {
    std::vector<double> lambda;
    Matrix basis;  // nodes x factors

    static FactorLoadings cosine(const curvespace::MaturityGrid& grid, std::size_t factors, double lambda1,
                                 double decay_power);
    std::size_t factors() const { return lambda.size(); }
    /// Largest |<psi_j, psi_k> - delta_jk| under the trapezoid rule.
    double orthonormality_defect(const curvespace::MaturityGrid& grid) const;
};

/// Bounded Lipschitz forward-rate response
/// kappa(f) = kappa0 (1 + beta tanh((f - center) / width)).
struct Kappa {
    double kappa0 = 1.0;
    double beta = 0.0;
    double center = 0.05;
    double width = 0.02;

    double value(double f) const;
    double derivative(double f) const;
};

/// State-dependent model of classical HJM type:
///   h_ik = lambda_k int_t^{s_i} kappa(f_t(u)) psi_k(u) du
/// with f_t the cell forwards implied by x. The cell holding t uses
/// kappa(center), so row i reads only x on nodes in [t, s_i].
class LocalHjm final : public VolatilityModel {
public:
    LocalHjm(curvespace::GridPtr grid, Kappa kappa, FactorLoadings loadings);

    std::string kind() const override { return "local_hjm"; }
    bool state_dependent() const override { return true; }
    const Kappa& kappa() const { return kappa_; }
    const FactorLoadings& loadings() const { return loadings_; }

    void relative_loadings(double t, std::span<const double> x, std::span<double> h) const override;
    void relative_loadings_tangent(double t, std::span<const double> x, std::span<const double> dx,
                                   std::span<double> dh) const override;
    void relative_loadings_adjoint(double t, std::span<const double> x, std::span<const double> hbar,
                                   std::span<double> xbar) const override;

private:
    // lambda_k * int over cell j of psi_k, trapezoid
    Matrix cell_weights_;  // (nodes - 1) x factors
    Kappa kappa_;
    FactorLoadings loadings_;
};

/// sigma = 0.
class ZeroVolatility final : public VolatilityModel {
public:
    ZeroVolatility(curvespace::GridPtr grid, std::size_t factors) : VolatilityModel(std::move(grid), factors) {}
    std::string kind() const override { return "zero"; }
    bool state_dependent() const override { return false; }
    void relative_loadings(double, std::span<const double>, std::span<double> h) const override;
    void relative_loadings_tangent(double, std::span<const double>, std::span<const double>,
                                   std::span<double> dh) const override;
    void relative_loadings_adjoint(double, std::span<const double>, std::span<const double>,
                                   std::span<double>) const override {}
};

}  // namespace hjm::dynamics
