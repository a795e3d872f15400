#include "hjm/malliavin/first_variation.hpp"

#include <cmath>

#include "hjm/core/error.hpp"

namespace hjm::malliavin {

using dynamics::Scheme;

PathView view(const dynamics::PathBundle& bundle, std::size_t p) {
    require(!bundle.states.empty() && !bundle.increments.empty(),
            "first variation needs stored states and increments");
    require(p < bundle.paths, "path index out of range");
    const std::size_t steps = bundle.time.steps();
    PathView v;
    v.time = &bundle.time;
    v.nodes = bundle.nodes;
    v.factors = bundle.factors;
    v.states = std::span<const double>(bundle.states).subspan(p * (steps + 1) * bundle.nodes, (steps + 1) * bundle.nodes);
    v.increments = std::span<const double>(bundle.increments).subspan(p * steps * bundle.factors, steps * bundle.factors);
    return v;
}

StepLinearization::StepLinearization(const dynamics::VolatilityModel& model, Scheme scheme)
    : model_(&model), scheme_(scheme) {
    const std::size_t n = model.nodes(), nf = model.factors();
    x_.resize(n);
    h_.resize(n * nf);
    g_.resize(n * nf);
    mult_.resize(n);
    scale_.resize(n);
    dh_.resize(n * nf);
    hbar_.resize(n * nf);
}

void StepLinearization::set(double t, double dt, std::span<const double> x, std::span<const double> dw) {
    const std::size_t n = model_->nodes(), nf = model_->factors();
    t_ = t;
    std::copy(x.begin(), x.end(), x_.begin());
    model_->relative_loadings(t, x, h_);
    const std::size_t i0 = dynamics::first_live_node(*model_->grid(), t);
    live_ = i0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0, q = 0.0;
        for (std::size_t k = 0; k < nf; ++k) {
            const double hik = h_[i * nf + k];
            z += hik * dw[k];
            q += hik * hik;
            g_[i * nf + k] = scheme_ == Scheme::log_euler ? dw[k] - hik * dt : dw[k];
        }
        if (i < i0) {
            mult_[i] = 1.0;
            scale_[i] = 0.0;
        } else if (scheme_ == Scheme::log_euler) {
            mult_[i] = std::exp(z - 0.5 * q * dt);
            scale_[i] = x[i] * mult_[i];
        } else {
            mult_[i] = 1.0 + z;
            scale_[i] = x[i];
        }
    }
}

void StepLinearization::set(double t, double dt, std::span<const double> x, std::span<const double> x_next,
                            std::span<const double> h, std::span<const double> dw) {
    const std::size_t n = model_->nodes(), nf = model_->factors();
    t_ = t;
    std::copy(x.begin(), x.end(), x_.begin());
    const std::size_t i0 = dynamics::first_live_node(*model_->grid(), t);
    live_ = i0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < i0) {
            mult_[i] = 1.0;
            scale_[i] = 0.0;
            continue;
        }
        for (std::size_t k = 0; k < nf; ++k) {
            const double hik = h[i * nf + k];
            h_[i * nf + k] = hik;
            g_[i * nf + k] = scheme_ == Scheme::log_euler ? dw[k] - hik * dt : dw[k];
        }
        mult_[i] = x_next[i] / x[i];
        scale_[i] = scheme_ == Scheme::log_euler ? x_next[i] : x[i];
    }
}

void StepLinearization::tangent(std::span<const double> dx, std::span<double> out) {
    const std::size_t n = model_->nodes(), nf = model_->factors();
    for (std::size_t i = 0; i < n; ++i) out[i] = mult_[i] * dx[i];
    if (!model_->state_dependent()) return;
    model_->relative_loadings_tangent(t_, x_, dx, dh_);
    for (std::size_t i = live_; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < nf; ++k) acc += dh_[i * nf + k] * g_[i * nf + k];
        out[i] += scale_[i] * acc;
    }
}

void StepLinearization::adjoint(std::span<const double> xbar_next, std::span<double> out) {
    const std::size_t n = model_->nodes(), nf = model_->factors();
    for (std::size_t i = 0; i < n; ++i) out[i] = mult_[i] * xbar_next[i];
    if (!model_->state_dependent()) return;
    std::fill(hbar_.begin(), hbar_.end(), 0.0);
    for (std::size_t i = live_; i < n; ++i)
        for (std::size_t k = 0; k < nf; ++k) hbar_[i * nf + k] = xbar_next[i] * scale_[i] * g_[i * nf + k];
    model_->relative_loadings_adjoint(t_, x_, hbar_, out);
}

namespace {

void check_range(const PathView& path, std::size_t from, std::size_t to) {
    require(path.time != nullptr, "first variation: empty path");
    require(from <= to && to <= path.steps(), "first variation: bad step range");
}

}  // namespace

Matrix propagate_tangent(const dynamics::VolatilityModel& model, Scheme scheme, const PathView& path,
                         std::size_t from, std::size_t to, Matrix columns) {
    check_range(path, from, to);
    const std::size_t n = model.nodes();
    require(static_cast<std::size_t>(columns.rows()) == n, "propagate_tangent: column size does not match grid");
    StepLinearization lin(model, scheme);
    // column-major scratch so each column is contiguous
    Eigen::MatrixXd cur = columns;
    Eigen::MatrixXd next(cur.rows(), cur.cols());
    for (std::size_t l = from; l < to; ++l) {
        lin.set(path.time->time(l), path.time->dt(l), path.state(l), path.increment(l));
        for (Eigen::Index c = 0; c < cur.cols(); ++c)
            lin.tangent(std::span<const double>(cur.col(c).data(), n), std::span<double>(next.col(c).data(), n));
        std::swap(cur, next);
        for (double v : std::span<const double>(cur.data(), cur.size()))
            if (!std::isfinite(v)) throw NumericalError("first variation: non-finite tangent");
    }
    return cur;
}

Vector propagate_adjoint(const dynamics::VolatilityModel& model, Scheme scheme, const PathView& path,
                         std::size_t from, std::size_t to, Vector v) {
    check_range(path, from, to);
    const std::size_t n = model.nodes();
    require(static_cast<std::size_t>(v.size()) == n, "propagate_adjoint: vector size does not match grid");
    StepLinearization lin(model, scheme);
    Vector prev(n);
    for (std::size_t l = to; l-- > from;) {
        lin.set(path.time->time(l), path.time->dt(l), path.state(l), path.increment(l));
        lin.adjoint(std::span<const double>(v.data(), n), std::span<double>(prev.data(), n));
        std::swap(v, prev);
    }
    return v;
}

Matrix first_variation(const dynamics::VolatilityModel& model, Scheme scheme, const PathView& path,
                       std::size_t from, std::size_t to) {
    const auto n = static_cast<Eigen::Index>(model.nodes());
    return propagate_tangent(model, scheme, path, from, to, Matrix::Identity(n, n));
}

std::vector<Matrix> picard_first_variation(const dynamics::VolatilityModel& model, const PathView& path,
                                           std::size_t from, std::size_t to, const Matrix& columns,
                                           std::size_t iterations) {
    check_range(path, from, to);
    const std::size_t n = model.nodes();
    const auto cols = columns.cols();
    const std::size_t span_steps = to - from;
    // Euler-form increments J_l(y) = (grad sigma(t_l, x_l) y) dW_l
    StepLinearization lin(model, Scheme::euler);
    std::vector<Eigen::MatrixXd> iterate(span_steps + 1, Eigen::MatrixXd(columns));
    std::vector<Matrix> out{columns};
    Eigen::VectorXd tmp(n);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<Eigen::MatrixXd> next(span_steps + 1);
        next[0] = columns;
        for (std::size_t r = 0; r < span_steps; ++r) {
            const std::size_t l = from + r;
            lin.set(path.time->time(l), path.time->dt(l), path.state(l), path.increment(l));
            next[r + 1] = next[r];
            for (Eigen::Index c = 0; c < cols; ++c) {
                lin.tangent(std::span<const double>(iterate[r].col(c).data(), n), std::span<double>(tmp.data(), n));
                // tangent returns y + J(y); keep only J(y)
                next[r + 1].col(c) += tmp - iterate[r].col(c);
            }
        }
        iterate = std::move(next);
        out.emplace_back(iterate.back());
    }
    return out;
}

Matrix malliavin_derivative_curve(const dynamics::VolatilityModel& model, Scheme scheme, const PathView& path,
                                  std::size_t l) {
    require(l <= path.steps(), "malliavin_derivative_curve: step out of range");
    Matrix sigma = model.sigma(path.time->time(l), path.state(l));
    return propagate_tangent(model, scheme, path, l, path.steps(), std::move(sigma));
}

}  // namespace hjm::malliavin
