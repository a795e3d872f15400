#pragma once

#include <stdexcept>
#include <string>

namespace hjm {

/// Violated operation precondition (bad curve, off-grid maturity, ...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Unreadable or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Estimated Monte Carlo cost above the configured cap.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, double estimated_cost)
        : std::runtime_error(what), estimated_cost_(estimated_cost) {}
    double estimated_cost() const noexcept { return estimated_cost_; }

private:
    double estimated_cost_;
};

/// Numerical breakdown: singular hedge matrix, non-finite derivative, too many
/// non-positive paths.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

}  // namespace hjm
