#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hjm/dynamics/parallel.hpp"
#include "hjm/dynamics/time_grid.hpp"

namespace hjm::malliavin {

/// Functional of the discretized Brownian path, given as the increments of all
/// steps (L x N, row-major).
class WienerFunctional {
public:
    explicit WienerFunctional(std::size_t factors) : factors_(factors) {}
    virtual ~WienerFunctional() = default;

    std::size_t factors() const { return factors_; }
    virtual double value(const dynamics::TimeGrid& time, std::span<const double> dw) const = 0;
    /// D_t X for t in [t_l, t_{l+1}).
    virtual void derivative(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t l,
                            std::span<double> out) const = 0;
    virtual std::optional<double> expectation(const dynamics::TimeGrid&) const { return std::nullopt; }
    /// E{D_t X | F_t} in closed form, when known. Only dw of steps < l is read.
    virtual bool exact_integrand(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t l,
                                 std::span<double> out) const;

private:
    std::size_t factors_;
};

/// X = sum_l <h(t_l), dW_l>.
class LinearFunctional final : public WienerFunctional {
public:
    using Integrand = std::function<void(double t, std::span<double> out)>;
    LinearFunctional(std::size_t factors, Integrand h) : WienerFunctional(factors), h_(std::move(h)) {}

    double value(const dynamics::TimeGrid& time, std::span<const double> dw) const override;
    void derivative(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t l,
                    std::span<double> out) const override;
    std::optional<double> expectation(const dynamics::TimeGrid&) const override { return 0.0; }
    bool exact_integrand(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t l,
                         std::span<double> out) const override;

private:
    Integrand h_;
};

/// X = W_T^k (power 1) or (W_T^k)^2 (power 2) for one driver k.
class BrownianPower final : public WienerFunctional {
public:
    BrownianPower(std::size_t factors, std::size_t driver, int power);

    double value(const dynamics::TimeGrid& time, std::span<const double> dw) const override;
    void derivative(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t l,
                    std::span<double> out) const override;
    std::optional<double> expectation(const dynamics::TimeGrid& time) const override;
    bool exact_integrand(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t l,
                         std::span<double> out) const override;

private:
    std::size_t driver_;
    int power_;
};

/// X = exp(<h, W_T> - |h|^2 T / 2) for a constant vector h.
class ExponentialMartingale final : public WienerFunctional {
public:
    explicit ExponentialMartingale(std::vector<double> h);

    double value(const dynamics::TimeGrid& time, std::span<const double> dw) const override;
    void derivative(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t l,
                    std::span<double> out) const override;
    std::optional<double> expectation(const dynamics::TimeGrid&) const override { return 1.0; }
    bool exact_integrand(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t l,
                         std::span<double> out) const override;

    /// M_{t_l} from the increments of steps < l.
    double running(const dynamics::TimeGrid& time, std::span<const double> dw, std::size_t l) const;

private:
    std::vector<double> h_;
    double h2_ = 0.0;
};

/// X = c.
class ConstantFunctional final : public WienerFunctional {
public:
    ConstantFunctional(std::size_t factors, double c) : WienerFunctional(factors), c_(c) {}
    double value(const dynamics::TimeGrid&, std::span<const double>) const override { return c_; }
    void derivative(const dynamics::TimeGrid&, std::span<const double>, std::size_t,
                    std::span<double> out) const override;
    std::optional<double> expectation(const dynamics::TimeGrid&) const override { return c_; }

private:
    double c_;
};

/// Increments of outer path p (L x N).
std::vector<double> wiener_increments(const dynamics::TimeGrid& time, std::size_t factors, std::uint64_t seed,
                                      std::size_t path, bool antithetic = false);

struct WienerIntegrand {
    std::vector<dynamics::MeanSe> components;  // one per factor
};

/// E{D_{t_l} X | F_{t_l}} by nested simulation: the increments of steps < l
/// are taken from `dw`, later ones from inner streams.
WienerIntegrand nested_integrand(const WienerFunctional& x, const dynamics::TimeGrid& time,
                                 std::span<const double> dw, std::size_t l, std::size_t inner_paths,
                                 std::uint64_t seed, std::uint64_t outer, bool antithetic = false);

enum class IntegrandSource { exact, nested };

struct Reconstruction {
    std::vector<double> residuals;
    double rms_residual = 0.0;
    double sd_value = 0.0;
    double relative_rms = 0.0;  // rms_residual / sd_value
    double mean_value = 0.0;
};

/// Residuals X - E{X} - sum_l <alpha_{t_l}, dW_l> over `paths` outer paths.
/// E{X} is the exact expectation when the functional provides one, the sample
/// mean otherwise.
Reconstruction reconstruct(const WienerFunctional& x, const dynamics::TimeGrid& time, std::size_t paths,
                           std::uint64_t seed, IntegrandSource source, std::size_t inner_paths = 256);

/// Piecewise-constant adapted process: beta on [t_l, t_{l+1}) may only read
/// the increments of earlier steps, which is all it is given.
using AdaptedProcess = std::function<void(std::size_t l, std::span<const double> past, std::span<double> out)>;

struct IbpCheck {
    dynamics::MeanSe lhs;   // E int <D_t X, beta_t> dt
    dynamics::MeanSe rhs;   // E X int <beta, dW>
    dynamics::MeanSe diff;  // paired difference
    bool pass = false;      // |lhs - rhs| <= 3 s.e. of the difference
};

IbpCheck integration_by_parts_check(const WienerFunctional& x, const AdaptedProcess& beta,
                                    const dynamics::TimeGrid& time, std::size_t paths, std::uint64_t seed);

}  // namespace hjm::malliavin
