#include "hjm/dynamics/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "hjm/core/error.hpp"

namespace hjm::dynamics {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    require(times_.size() >= 2 && times_.front() == 0.0, "TimeGrid: need t_0 = 0 and at least one step");
    for (std::size_t l = 1; l < times_.size(); ++l)
        require(times_[l] > times_[l - 1], "TimeGrid: times must be strictly increasing");
}

TimeGrid TimeGrid::uniform(double horizon, std::size_t steps) {
    require(horizon > 0.0 && steps >= 1, "TimeGrid::uniform: need horizon > 0 and steps >= 1");
    std::vector<double> t(steps + 1);
    for (std::size_t l = 0; l <= steps; ++l) t[l] = horizon * static_cast<double>(l) / static_cast<double>(steps);
    t.back() = horizon;
    return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::with_step(double horizon, double dt) {
    require(dt > 0.0, "TimeGrid::with_step: dt must be positive");
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(horizon / dt)));
    return uniform(horizon, steps);
}

std::size_t TimeGrid::index_of(double t, double tol) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
    if (it != times_.end() && std::abs(*it - t) <= tol) return static_cast<std::size_t>(it - times_.begin());
    return steps() + 1;
}

}  // namespace hjm::dynamics
