#pragma once

#include <span>
#include <vector>

#include "hjm/curvespace/grid.hpp"

namespace hjm::curvespace {

enum class Space { f1v, f2w };

/// Discrete F1v norm: forward differences weighted by v at interval midpoints,
/// with the ghost interval [s_M, s_M + tail] closing the curve at zero.
double f1v_norm(const MaturityGrid& grid, std::span<const double> x);

/// Discrete F2w norm: three-point second differences weighted by w at the
/// centre node. Two ghost zeros (s_M + tail, s_M + 2 tail) are appended, so the
/// norm vanishes only for the zero curve.
double f2w_norm(const MaturityGrid& grid, std::span<const double> x);

double sobolev_norm(const MaturityGrid& grid, std::span<const double> x, Space space);

/// Norm in F1v* of the atomic functional sum_i c_i delta_{s_i} (one coefficient
/// per node):  sqrt(sum_j Delta_j S_j^2 / v(mid_j)),  S_j = c_0 + ... + c_j.
double f1v_dual_norm(const MaturityGrid& grid, std::span<const double> coeffs);

/// Node coefficients of the discrete derivative functional x -> x'(t), the
/// forward difference across the interval containing t.
std::vector<double> derivative_functional(const MaturityGrid& grid, double t);

/// f1v_dual_norm of derivative_functional(grid, t); equals 1/sqrt(v Delta)
/// for the interval holding t, so it grows without bound under refinement.
double derivative_dual_norm(const MaturityGrid& grid, double t);

}  // namespace hjm::curvespace
