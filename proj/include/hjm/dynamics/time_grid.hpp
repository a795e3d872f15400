#pragma once

#include <cstddef>
#include <vector>

namespace hjm::dynamics {

/// Simulation dates t_0 = 0 < t_1 < ... < t_L.
class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> times);

    /// L equal steps on [0, horizon]; t_l = l * horizon / L.
    static TimeGrid uniform(double horizon, std::size_t steps);
    /// Uniform grid with step close to dt (steps = round(horizon / dt)).
    static TimeGrid with_step(double horizon, double dt);

    std::size_t steps() const { return times_.size() - 1; }
    double time(std::size_t l) const { return times_[l]; }
    double dt(std::size_t l) const { return times_[l + 1] - times_[l]; }
    double horizon() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }

    /// Index l with |t_l - t| <= tol, or steps() + 1 if there is none.
    std::size_t index_of(double t, double tol = 1e-9) const;

private:
    std::vector<double> times_{0.0};
};

}  // namespace hjm::dynamics
