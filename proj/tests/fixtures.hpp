#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "hjm/curvespace/curves.hpp"
#include "hjm/curvespace/grid.hpp"
#include "hjm/dynamics/volatility.hpp"

namespace fixtures {

using namespace hjm;

inline curvespace::GridPtr yearly_grid(double s_max = 30.0) {
    return curvespace::make_grid(curvespace::MaturityGrid::uniform(s_max, static_cast<std::size_t>(s_max)));
}

inline std::vector<double> flat_discounted(const curvespace::GridPtr& g, double rate) {
    return curvespace::initial_discounted_curve(curvespace::flat_forwards(g, rate)).values;
}

inline std::shared_ptr<dynamics::GaussianHjm> ho_lee(const curvespace::GridPtr& g, double tau = 0.01) {
    return std::make_shared<dynamics::GaussianHjm>(g, std::vector{dynamics::TauSpec::constant(tau)});
}

inline std::shared_ptr<dynamics::GaussianHjm> three_factor(const curvespace::GridPtr& g) {
    return std::make_shared<dynamics::GaussianHjm>(
        g, std::vector{dynamics::TauSpec::constant(0.006), dynamics::TauSpec::exponential(0.01, 0.5),
                       dynamics::TauSpec::exponential(0.008, 0.1)});
}

inline std::shared_ptr<dynamics::LocalHjm> local(const curvespace::GridPtr& g, std::size_t factors = 10,
                                                 double beta = 0.5) {
    dynamics::Kappa kappa{1.0, beta, 0.05, 0.02};
    return std::make_shared<dynamics::LocalHjm>(g, kappa,
                                                dynamics::FactorLoadings::cosine(*g, factors, 0.05, 1.0));
}

}  // namespace fixtures
