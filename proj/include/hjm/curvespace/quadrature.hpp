#pragma once

#include <functional>

namespace hjm::curvespace {

struct HalfLineIntegral {
    double value = 0.0;
    bool converged = false;
    int panels = 0;
};

/// Integral of f over [0, inf) on doubling panels [0,1], [1,2], [2,4], ...
/// Converged once two consecutive panel contributions fall below
/// rel_tol * |partial sum|; a sequence that is still moving after max_panels
/// panels is reported as not converged.
HalfLineIntegral integrate_half_line(const std::function<double(double)>& f, double rel_tol = 1e-12,
                                     int max_panels = 64);

/// Adaptive Gauss-Kronrod on a finite interval.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13);

}  // namespace hjm::curvespace
