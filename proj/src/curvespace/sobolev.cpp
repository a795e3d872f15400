#include "hjm/curvespace/sobolev.hpp"

#include <cmath>

#include "hjm/core/error.hpp"
#include "hjm/simd/kernels.hpp"

namespace hjm::curvespace {
namespace {

void check_size(const MaturityGrid& grid, std::size_t n, const char* what) {
    if (n != grid.size()) throw PreconditionError(std::string(what) + ": curve size does not match grid");
}

}  // namespace

double f1v_norm(const MaturityGrid& grid, std::span<const double> x) {
    check_size(grid, x.size(), "f1v_norm");
    const std::size_t n = grid.size();
    std::vector<double> ext(x.begin(), x.end());
    ext.push_back(0.0);
    std::vector<double> d(n);
    const auto& k = simd::kernels();
    k.forward_diff(ext.data(), grid.inverse_widths().data(), d.data(), n + 1);
    return std::sqrt(k.weighted_sumsq(d.data(), grid.v_mass().data(), n));
}

double f2w_norm(const MaturityGrid& grid, std::span<const double> x) {
    check_size(grid, x.size(), "f2w_norm");
    const std::size_t n = grid.size();
    if (n < 3) throw PreconditionError("f2w_norm: need at least 3 nodes");
    std::vector<double> s(grid.nodes().begin(), grid.nodes().end());
    std::vector<double> ext(x.begin(), x.end());
    s.push_back(grid.last() + grid.ghost_tail());
    s.push_back(grid.last() + 2.0 * grid.ghost_tail());
    ext.push_back(0.0);
    ext.push_back(0.0);
    double acc = 0.0;
    for (std::size_t j = 0; j + 2 < s.size(); ++j) {
        const double h0 = s[j + 1] - s[j];
        const double h1 = s[j + 2] - s[j + 1];
        const double second =
            2.0 * ((ext[j + 2] - ext[j + 1]) / h1 - (ext[j + 1] - ext[j]) / h0) / (h0 + h1);
        acc += second * second * grid.w()(s[j + 1]) * 0.5 * (h0 + h1);
    }
    return std::sqrt(acc);
}

double sobolev_norm(const MaturityGrid& grid, std::span<const double> x, Space space) {
    return space == Space::f1v ? f1v_norm(grid, x) : f2w_norm(grid, x);
}

double f1v_dual_norm(const MaturityGrid& grid, std::span<const double> coeffs) {
    check_size(grid, coeffs.size(), "f1v_dual_norm");
    const auto widths = grid.widths();
    const auto mass = grid.v_mass();
    double partial = 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        partial += coeffs[j];
        acc += partial * partial * widths[j] * widths[j] / mass[j];
    }
    return std::sqrt(acc);
}

std::vector<double> derivative_functional(const MaturityGrid& grid, double t) {
    require(t >= 0.0 && t < grid.last(), "derivative_functional: t outside [0, s_M)");
    const std::size_t k = grid.interval_of(t);
    std::vector<double> c(grid.size(), 0.0);
    const double inv = grid.inverse_widths()[k];
    c[k] = -inv;
    c[k + 1] = inv;
    return c;
}

double derivative_dual_norm(const MaturityGrid& grid, double t) {
    return f1v_dual_norm(grid, derivative_functional(grid, t));
}

}  // namespace hjm::curvespace
