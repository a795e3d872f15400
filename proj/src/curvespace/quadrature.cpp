#include "hjm/curvespace/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

namespace hjm::curvespace {

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol);
}

HalfLineIntegral integrate_half_line(const std::function<double(double)>& f, double rel_tol,
                                     int max_panels) {
    HalfLineIntegral out;
    double lo = 0.0;
    double hi = 1.0;
    int quiet = 0;
    for (int p = 0; p < max_panels; ++p) {
        const double piece = integrate(f, lo, hi);
        out.value += piece;
        out.panels = p + 1;
        if (!std::isfinite(out.value)) return out;
        if (std::abs(piece) <= rel_tol * std::abs(out.value)) {
            if (++quiet == 2) {
                out.converged = true;
                return out;
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        hi *= 2.0;
    }
    return out;
}

}  // namespace hjm::curvespace
