// Compiled with -mavx2 -mfma; only reached through the dispatch table after a
// runtime CPU check.
#include <immintrin.h>

#include "hjm/simd/kernels.hpp"

namespace hjm::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void gemv_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) y[i] = dot_avx2(a + i * cols, x, cols);
}

void gemv_t_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t k = 0; k < cols; ++k) y[k] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) axpy_avx2(x[i], a + i * cols, y, cols);
}

void row_scaled_sumsq_avx2(const double* a, std::size_t rows, std::size_t cols, const double* s,
                           double* out) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = a + i * cols;
        __m256d acc = _mm256_setzero_pd();
        std::size_t k = 0;
        for (; k + 4 <= cols; k += 4) {
            const __m256d v = _mm256_mul_pd(_mm256_loadu_pd(row + k), _mm256_loadu_pd(s + k));
            acc = _mm256_fmadd_pd(v, v, acc);
        }
        double r = hsum(acc);
        for (; k < cols; ++k) {
            const double v = row[k] * s[k];
            r += v * v;
        }
        out[i] = r;
    }
}

double weighted_sumsq_avx2(const double* x, const double* w, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), vx), vx, acc);
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += w[i] * x[i] * x[i];
    return r;
}

void forward_diff_avx2(const double* x, const double* inv_h, double* out, std::size_t n) {
    if (n < 2) return;
    const std::size_t m = n - 1;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i + 1), _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(d, _mm256_loadu_pd(inv_h + i)));
    }
    for (; i < m; ++i) out[i] = (x[i + 1] - x[i]) * inv_h[i];
}

}  // namespace

namespace detail {
const KernelTable avx2_table{
    Backend::avx2,       dot_avx2,           axpy_avx2,        gemv_avx2, gemv_t_avx2,
    row_scaled_sumsq_avx2, weighted_sumsq_avx2, forward_diff_avx2,
};
}  // namespace detail

}  // namespace hjm::simd
