#include "hjm/dynamics/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hjm/core/error.hpp"
#include "hjm/curvespace/curves.hpp"
#include "hjm/curvespace/sobolev.hpp"
#include "hjm/dynamics/rng.hpp"

namespace hjm::dynamics {

std::vector<std::vector<double>> sample_states(const curvespace::MaturityGrid& grid, std::span<const double> x0,
                                               std::size_t count, std::uint64_t seed, double scale) {
    constexpr std::size_t modes = 6;
    std::vector<std::vector<double>> out(count, std::vector<double>(grid.size()));
    std::vector<double> a(modes);
    for (std::size_t c = 0; c < count; ++c) {
        NoiseStream(path_key(seed, c)).normals(0, a);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double eps = 0.0;
            for (std::size_t m = 0; m < modes; ++m)
                eps += a[m] / static_cast<double>(m + 1) *
                       std::cos(std::numbers::pi * static_cast<double>(m) * grid.node(i) / grid.last());
            out[c][i] = x0[i] * std::exp(scale * eps);
        }
    }
    return out;
}

namespace {

template <class Norm>
double hs_norm(const Matrix& a, Norm norm) {
    double acc = 0.0;
    std::vector<double> col(a.rows());
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) col[i] = a(i, k);
        const double v = norm(col);
        acc += v * v;
    }
    return std::sqrt(acc);
}

}  // namespace

double hs_norm_f1v(const curvespace::MaturityGrid& grid, const Matrix& a) {
    return hs_norm(a, [&](const std::vector<double>& c) { return curvespace::f1v_norm(grid, c); });
}

double hs_norm_f2w(const curvespace::MaturityGrid& grid, const Matrix& a) {
    return hs_norm(a, [&](const std::vector<double>& c) { return curvespace::f2w_norm(grid, c); });
}

double lipschitz_estimate(const VolatilityModel& model, double t, const std::vector<std::vector<double>>& states) {
    const auto& g = *model.grid();
    double worst = 0.0;
    for (std::size_t p = 0; p + 1 < states.size(); p += 2) {
        const auto& x = states[p];
        const auto& y = states[p + 1];
        std::vector<double> d(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
        const double dn = curvespace::f1v_norm(g, d);
        if (dn == 0.0) continue;
        worst = std::max(worst, hs_norm_f1v(g, model.sigma(t, x) - model.sigma(t, y)) / dn);
    }
    return worst;
}

LocalityReport locality_check(const VolatilityModel& model, double t, const std::vector<std::vector<double>>& states,
                              std::uint64_t seed, double tol) {
    const auto& g = *model.grid();
    const std::size_t n = g.size();
    LocalityReport out;
    std::vector<double> noise(n);
    for (std::size_t c = 0; c < states.size(); ++c) {
        const auto& x = states[c];
        const Matrix base = model.sigma(t, x);
        NoiseStream(path_key(seed ^ 0xA5A5A5A5ull, c)).normals(1, noise);
        for (std::size_t s = first_live_node(g, t); s < n; ++s) {
            std::vector<double> y = x;
            for (std::size_t i = 0; i < n; ++i) {
                const bool inside = g.node(i) > t - freeze_tol && i <= s;
                if (!inside) y[i] *= std::exp(0.2 * noise[i]);
            }
            const Matrix moved = model.sigma(t, y);
            const double change = (moved.row(s) - base.row(s)).cwiseAbs().maxCoeff();
            out.max_change = std::max(out.max_change, change);
        }
    }
    out.pass = out.max_change < tol;
    return out;
}

Spectrum spectrum(const Matrix& a, double rel_tol) {
    Spectrum out;
    if (a.size() == 0) return out;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    out.max_singular = sv.size() ? sv(0) : 0.0;
    out.min_singular = sv.size() ? sv(sv.size() - 1) : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * out.max_singular) ++out.rank;
    out.condition = out.min_singular > 0.0 ? out.max_singular / out.min_singular
                                           : std::numeric_limits<double>::infinity();
    return out;
}

Matrix rows_at(const VolatilityModel& model, double t, std::span<const double> x, std::span<const double> maturities) {
    const Matrix s = model.sigma(t, x);
    Matrix out(maturities.size(), model.factors());
    for (std::size_t r = 0; r < maturities.size(); ++r) out.row(r) = s.row(model.grid()->require_node(maturities[r]));
    return out;
}

Spectrum restricted_spectrum(const VolatilityModel& model, double t, std::span<const double> x) {
    const std::size_t i0 = first_live_node(*model.grid(), t);
    const Matrix s = model.sigma(t, x);
    if (i0 >= model.nodes()) return {};
    return spectrum(s.bottomRows(model.nodes() - i0));
}

Diagnostics diagnostics(const VolatilityModel& model, std::span<const double> x0, std::span<const double> times,
                        std::size_t pairs, std::uint64_t seed) {
    require(pairs >= 1, "diagnostics: need at least one state pair");
    const auto& g = *model.grid();
    const auto states = sample_states(g, x0, 2 * pairs, seed);
    Diagnostics out;
    for (double t : times) {
        out.lipschitz_est = std::max(out.lipschitz_est, lipschitz_estimate(model, t, states));
        const auto loc = locality_check(model, t, states, seed);
        out.locality_pass = out.locality_pass && loc.pass;
        out.locality_max_change = std::max(out.locality_max_change, loc.max_change);
        double min_sv = std::numeric_limits<double>::infinity();
        std::size_t rank = model.factors();
        for (std::size_t c = 0; c < states.size(); c += 2) {
            const Spectrum sp = restricted_spectrum(model, t, states[c]);
            min_sv = std::min(min_sv, sp.min_singular);
            rank = std::min(rank, sp.rank);
        }
        out.times.push_back(t);
        out.min_singular_value.push_back(min_sv);
        out.rank.push_back(rank);
    }
    return out;
}

double integrability_integrand(const VolatilityModel& model, double t, std::span<const double> x) {
    const auto& g = *model.grid();
    require(t < g.last(), "integrability_integrand: t beyond the grid");
    const std::size_t j = g.interval_of(t);
    const double slope = (x[j + 1] - x[j]) / (g.node(j + 1) - g.node(j));
    const double xt = curvespace::log_linear_at(g, x, t);
    const double hs = hs_norm_f2w(g, model.sigma(t, x));
    return std::abs(slope) * curvespace::f2w_norm(g, x) / (xt * xt) + (1.0 + 1.0 / (xt * xt)) * hs * hs;
}

}  // namespace hjm::dynamics
