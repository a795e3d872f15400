#pragma once

#include <cstddef>
#include <string_view>

namespace hjm::simd {

enum class Backend { scalar, avx2 };

/// Dense double-precision inner loops used by the simulation engine.
///
/// Matrices are row-major. Every kernel has a scalar reference version and an
/// AVX2/FMA version; the two agree to rounding (reductions may associate
/// differently), which the equivalence tests check.
struct KernelTable {
    Backend backend;
    // sum_i x_i * y_i
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // y = A x, A is rows x cols
    void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
    // y = A^T x, A is rows x cols, y has cols entries
    void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
    // out_i = sum_k (A_ik * s_k)^2
    void (*row_scaled_sumsq)(const double* a, std::size_t rows, std::size_t cols, const double* s,
                             double* out);
    // sum_i w_i * x_i^2
    double (*weighted_sumsq)(const double* x, const double* w, std::size_t n);
    // out_i = (x_{i+1} - x_i) * inv_h_i for i < n - 1
    void (*forward_diff)(const double* x, const double* inv_h, double* out, std::size_t n);
};

const KernelTable& kernel_table(Backend backend);

/// Active table. Chosen on first use: AVX2 when the CPU supports it, unless the
/// HJMLAB_SIMD environment variable says "scalar".
const KernelTable& kernels();

bool avx2_supported();
void select_backend(Backend backend);
Backend active_backend();
std::string_view backend_name(Backend backend);

namespace detail {
extern const KernelTable scalar_table;
#if defined(HJM_HAVE_AVX2_KERNELS)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace hjm::simd
