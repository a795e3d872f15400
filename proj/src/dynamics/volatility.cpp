#include "hjm/dynamics/volatility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hjm/core/error.hpp"

namespace hjm::dynamics {

std::size_t first_live_node(const curvespace::MaturityGrid& grid, double t) {
    return grid.first_live_node(t + freeze_tol);
}

VolatilityModel::VolatilityModel(curvespace::GridPtr grid, std::size_t factors)
    : grid_(std::move(grid)), factors_(factors) {
    require(grid_ != nullptr, "VolatilityModel: missing grid");
    require(factors_ >= 1, "VolatilityModel: need at least one factor");
}

void VolatilityModel::check_state(std::span<const double> x) const {
    require(x.size() == nodes(), "volatility: state size does not match grid");
    for (double v : x) require(v > 0.0 && std::isfinite(v), "volatility: curve must be strictly positive");
}

void VolatilityModel::fd_loadings_tangent(double t, std::span<const double> x, std::span<const double> dx,
                                          std::span<double> dh) const {
    const std::size_t n = nodes();
    double nx = 0.0, ndx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        nx += x[i] * x[i];
        ndx += dx[i] * dx[i];
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    if (ndx == 0.0) return;
    const double eps = 1e-5 * std::sqrt(nx) / std::sqrt(ndx);
    std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    for (std::size_t i = 0; i < n; ++i) {
        xp[i] += eps * dx[i];
        xm[i] -= eps * dx[i];
    }
    std::vector<double> hp(dh.size()), hm(dh.size());
    relative_loadings(t, xp, hp);
    relative_loadings(t, xm, hm);
    for (std::size_t i = 0; i < dh.size(); ++i) {
        dh[i] = (hp[i] - hm[i]) / (2.0 * eps);
        if (!std::isfinite(dh[i])) throw NumericalError("volatility: non-finite finite-difference derivative");
    }
}

void VolatilityModel::relative_loadings_tangent(double t, std::span<const double> x, std::span<const double> dx,
                                                std::span<double> dh) const {
    fd_loadings_tangent(t, x, dx, dh);
}

void VolatilityModel::relative_loadings_adjoint(double t, std::span<const double> x,
                                                std::span<const double> hbar, std::span<double> xbar) const {
    const std::size_t n = nodes();
    std::vector<double> e(n, 0.0), dh(n * factors_);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        fd_loadings_tangent(t, x, e, dh);
        double acc = 0.0;
        for (std::size_t m = 0; m < dh.size(); ++m) acc += hbar[m] * dh[m];
        xbar[j] += acc;
        e[j] = 0.0;
    }
}

Matrix VolatilityModel::sigma(double t, std::span<const double> x) const {
    check_state(x);
    Matrix h(nodes(), factors_);
    relative_loadings(t, x, std::span<double>(h.data(), h.size()));
    for (std::size_t i = 0; i < nodes(); ++i) h.row(i) *= x[i];
    return h;
}

Matrix VolatilityModel::sigma_tangent(double t, std::span<const double> x, std::span<const double> dx) const {
    check_state(x);
    Matrix h(nodes(), factors_), dh(nodes(), factors_);
    relative_loadings(t, x, std::span<double>(h.data(), h.size()));
    relative_loadings_tangent(t, x, dx, std::span<double>(dh.data(), dh.size()));
    for (std::size_t i = 0; i < nodes(); ++i) dh.row(i) = dx[i] * h.row(i) + x[i] * dh.row(i);
    return dh;
}

// ---------------------------------------------------------------------------

TauSpec TauSpec::constant(double level) {
    TauSpec s;
    s.kind = Kind::constant;
    s.level = level;
    return s;
}

TauSpec TauSpec::exponential(double level, double decay) {
    require(decay > 0.0, "TauSpec::exponential: decay must be positive");
    TauSpec s;
    s.kind = Kind::exponential;
    s.level = level;
    s.decay = decay;
    return s;
}

TauSpec TauSpec::piecewise(std::vector<double> breaks, std::vector<double> values) {
    require(!breaks.empty() && breaks.size() == values.size(), "TauSpec::piecewise: one value per break");
    require(breaks.front() == 0.0, "TauSpec::piecewise: first break must be 0");
    for (std::size_t j = 1; j < breaks.size(); ++j)
        require(breaks[j] > breaks[j - 1], "TauSpec::piecewise: breaks must increase");
    TauSpec s;
    s.kind = Kind::piecewise;
    s.breaks = std::move(breaks);
    s.values = std::move(values);
    return s;
}

double TauSpec::value(double t, double u) const {
    switch (kind) {
        case Kind::constant:
            return level;
        case Kind::exponential:
            return level * std::exp(-decay * (u - t));
        case Kind::piecewise: {
            auto it = std::upper_bound(breaks.begin(), breaks.end(), u);
            const auto j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - breaks.begin() - 1, 0));
            return values[j];
        }
    }
    return 0.0;
}

double TauSpec::integral(double t, double s) const {
    if (s == t) return 0.0;
    if (s < t && kind == Kind::piecewise) return -integral(s, t);
    switch (kind) {
        case Kind::constant:
            return level * (s - t);
        case Kind::exponential:
            return level * -std::expm1(-decay * (s - t)) / decay;
        case Kind::piecewise: {
            double acc = 0.0;
            for (std::size_t j = 0; j < breaks.size(); ++j) {
                const double lo = std::max(t, breaks[j]);
                const double hi = j + 1 < breaks.size() ? std::min(s, breaks[j + 1]) : s;
                if (hi > lo) acc += values[j] * (hi - lo);
            }
            return acc;
        }
    }
    return 0.0;
}

GaussianHjm::GaussianHjm(curvespace::GridPtr grid, std::vector<TauSpec> taus)
    : VolatilityModel(std::move(grid), taus.size()), taus_(std::move(taus)) {}

void GaussianHjm::relative_loadings(double t, std::span<const double>, std::span<double> h) const {
    const auto& g = *grid();
    const std::size_t nf = factors();
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = first_live_node(g, t); i < g.size(); ++i)
        for (std::size_t k = 0; k < nf; ++k) h[i * nf + k] = taus_[k].integral(t, g.node(i));
}

void GaussianHjm::relative_loadings_tangent(double, std::span<const double>, std::span<const double>,
                                            std::span<double> dh) const {
    std::fill(dh.begin(), dh.end(), 0.0);
}

void GaussianHjm::relative_loadings_adjoint(double, std::span<const double>, std::span<const double>,
                                            std::span<double>) const {}

// ---------------------------------------------------------------------------

FactorLoadings FactorLoadings::cosine(const curvespace::MaturityGrid& grid, std::size_t factors, double lambda1,
                                      double decay_power) {
    require(factors >= 1, "FactorLoadings: need at least one factor");
    require(factors <= grid.size(), "FactorLoadings: more factors than grid nodes");
    require(lambda1 > 0.0 && decay_power > 0.5, "FactorLoadings: need lambda_1 > 0 and p > 1/2");
    const std::size_t n = grid.size();
    std::vector<double> q(n, 0.0);  // trapezoid weights on [0, s_M]
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = grid.node(i + 1) - grid.node(i);
        q[i] += 0.5 * h;
        q[i + 1] += 0.5 * h;
    }
    auto inner = [&](const Vector& a, const Vector& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += q[i] * a[i] * b[i];
        return acc;
    };
    FactorLoadings out;
    out.lambda.resize(factors);
    out.basis = Matrix::Zero(n, factors);
    std::vector<Vector> done;
    for (std::size_t k = 0; k < factors; ++k) {
        out.lambda[k] = lambda1 * std::pow(static_cast<double>(k + 1), -decay_power);
        Vector v(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = std::cos(std::numbers::pi * static_cast<double>(k) * grid.node(i) / grid.last());
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& d : done) v -= inner(v, d) * d;
        const double norm = std::sqrt(inner(v, v));
        require(norm > 1e-10, "FactorLoadings: basis degenerates on this grid");
        v /= norm;
        out.basis.col(k) = v;
        done.push_back(v);
    }
    return out;
}

double FactorLoadings::orthonormality_defect(const curvespace::MaturityGrid& grid) const {
    const std::size_t n = grid.size();
    double worst = 0.0;
    for (std::size_t a = 0; a < factors(); ++a)
        for (std::size_t b = 0; b < factors(); ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double h = grid.node(i + 1) - grid.node(i);
                acc += 0.5 * h * (basis(i, a) * basis(i, b) + basis(i + 1, a) * basis(i + 1, b));
            }
            worst = std::max(worst, std::abs(acc - (a == b ? 1.0 : 0.0)));
        }
    return worst;
}

double Kappa::value(double f) const { return kappa0 * (1.0 + beta * std::tanh((f - center) / width)); }

double Kappa::derivative(double f) const {
    const double th = std::tanh((f - center) / width);
    return kappa0 * beta * (1.0 - th * th) / width;
}

LocalHjm::LocalHjm(curvespace::GridPtr grid, Kappa kappa, FactorLoadings loadings)
    : VolatilityModel(std::move(grid), loadings.factors()), kappa_(kappa), loadings_(std::move(loadings)) {
    const auto& g = *this->grid();
    require(static_cast<std::size_t>(loadings_.basis.rows()) == g.size(), "LocalHjm: basis does not match grid");
    require(kappa_.width > 0.0, "LocalHjm: kappa width must be positive");
    const std::size_t nf = factors();
    cell_weights_.resize(g.size() - 1, nf);
    for (std::size_t j = 0; j + 1 < g.size(); ++j) {
        const double h = g.node(j + 1) - g.node(j);
        for (std::size_t k = 0; k < nf; ++k)
            cell_weights_(j, k) =
                loadings_.lambda[k] * 0.5 * h * (loadings_.basis(j, k) + loadings_.basis(j + 1, k));
    }
}

void LocalHjm::relative_loadings(double t, std::span<const double> x, std::span<double> h) const {
    const auto& g = *grid();
    const std::size_t n = g.size();
    const std::size_t nf = factors();
    std::fill(h.begin(), h.end(), 0.0);
    const std::size_t i0 = first_live_node(g, t);
    if (i0 >= n) return;
    // cell [t, s_{i0}]: linear psi, kappa at the centre rate
    const std::size_t j = i0 - 1;
    const double cell = g.node(i0) - g.node(j);
    const double theta = std::clamp((t - g.node(j)) / cell, 0.0, 1.0);
    const double len = g.node(i0) - std::max(t, g.node(j));
    const double kc = kappa_.value(kappa_.center);
    for (std::size_t k = 0; k < nf; ++k) {
        const double psi_t = (1.0 - theta) * loadings_.basis(j, k) + theta * loadings_.basis(i0, k);
        h[i0 * nf + k] = loadings_.lambda[k] * kc * 0.5 * len * (psi_t + loadings_.basis(i0, k));
    }
    for (std::size_t i = i0 + 1; i < n; ++i) {
        const double f = -std::log(x[i] / x[i - 1]) / (g.node(i) - g.node(i - 1));
        const double kv = kappa_.value(f);
        for (std::size_t k = 0; k < nf; ++k) h[i * nf + k] = h[(i - 1) * nf + k] + kv * cell_weights_(i - 1, k);
    }
}

void LocalHjm::relative_loadings_tangent(double t, std::span<const double> x, std::span<const double> dx,
                                         std::span<double> dh) const {
    const auto& g = *grid();
    const std::size_t n = g.size();
    const std::size_t nf = factors();
    std::fill(dh.begin(), dh.end(), 0.0);
    const std::size_t i0 = first_live_node(g, t);
    for (std::size_t i = i0 + 1; i < n; ++i) {
        const double inv_h = 1.0 / (g.node(i) - g.node(i - 1));
        const double f = -std::log(x[i] / x[i - 1]) * inv_h;
        const double df = -(dx[i] / x[i] - dx[i - 1] / x[i - 1]) * inv_h;
        const double dk = kappa_.derivative(f) * df;
        for (std::size_t k = 0; k < nf; ++k) dh[i * nf + k] = dh[(i - 1) * nf + k] + dk * cell_weights_(i - 1, k);
    }
}

void LocalHjm::relative_loadings_adjoint(double t, std::span<const double> x, std::span<const double> hbar,
                                         std::span<double> xbar) const {
    const auto& g = *grid();
    const std::size_t n = g.size();
    const std::size_t nf = factors();
    const std::size_t i0 = first_live_node(g, t);
    if (i0 + 1 >= n) return;
    thread_local std::vector<double> acc;
    acc.assign(nf, 0.0);
    // cell i-1 feeds rows i, i+1, ..., n-1
    for (std::size_t i = n - 1; i > i0; --i) {
        for (std::size_t k = 0; k < nf; ++k) acc[k] += hbar[i * nf + k];
        const double inv_h = 1.0 / (g.node(i) - g.node(i - 1));
        const double f = -std::log(x[i] / x[i - 1]) * inv_h;
        double kbar = 0.0;
        for (std::size_t k = 0; k < nf; ++k) kbar += acc[k] * cell_weights_(i - 1, k);
        const double fbar = kbar * kappa_.derivative(f);
        xbar[i] -= fbar * inv_h / x[i];
        xbar[i - 1] += fbar * inv_h / x[i - 1];
    }
}

void ZeroVolatility::relative_loadings(double, std::span<const double>, std::span<double> h) const {
    std::fill(h.begin(), h.end(), 0.0);
}

void ZeroVolatility::relative_loadings_tangent(double, std::span<const double>, std::span<const double>,
                                               std::span<double> dh) const {
    std::fill(dh.begin(), dh.end(), 0.0);
}

}  // namespace hjm::dynamics
