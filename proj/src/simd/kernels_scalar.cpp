#include "hjm/simd/kernels.hpp"

namespace hjm::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) y[i] = dot_scalar(a + i * cols, x, cols);
}

void gemv_t_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t k = 0; k < cols; ++k) y[k] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) axpy_scalar(x[i], a + i * cols, y, cols);
}

void row_scaled_sumsq_scalar(const double* a, std::size_t rows, std::size_t cols, const double* s,
                             double* out) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = a + i * cols;
        double acc = 0.0;
        for (std::size_t k = 0; k < cols; ++k) {
            const double v = row[k] * s[k];
            acc += v * v;
        }
        out[i] = acc;
    }
}

double weighted_sumsq_scalar(const double* x, const double* w, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i] * x[i];
    return acc;
}

void forward_diff_scalar(const double* x, const double* inv_h, double* out, std::size_t n) {
    for (std::size_t i = 0; i + 1 < n; ++i) out[i] = (x[i + 1] - x[i]) * inv_h[i];
}

}  // namespace

namespace detail {
const KernelTable scalar_table{
    Backend::scalar,       dot_scalar,           axpy_scalar,        gemv_scalar, gemv_t_scalar,
    row_scaled_sumsq_scalar, weighted_sumsq_scalar, forward_diff_scalar,
};
}  // namespace detail

}  // namespace hjm::simd
