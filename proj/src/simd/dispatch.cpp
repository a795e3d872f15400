#include <atomic>
#include <cstdlib>
#include <string>

#include "hjm/simd/kernels.hpp"

namespace hjm::simd {
namespace {

Backend initial_backend() {
    if (const char* env = std::getenv("HJMLAB_SIMD")) {
        if (std::string(env) == "scalar") return Backend::scalar;
    }
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

std::atomic<const KernelTable*>& active_table() {
    static std::atomic<const KernelTable*> table{&kernel_table(initial_backend())};
    return table;
}

}  // namespace

bool avx2_supported() {
#if defined(HJM_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& kernel_table(Backend backend) {
#if defined(HJM_HAVE_AVX2_KERNELS)
    if (backend == Backend::avx2 && avx2_supported()) return detail::avx2_table;
#else
    (void)backend;
#endif
    return detail::scalar_table;
}

const KernelTable& kernels() { return *active_table().load(std::memory_order_acquire); }

void select_backend(Backend backend) {
    active_table().store(&kernel_table(backend), std::memory_order_release);
}

Backend active_backend() { return kernels().backend; }

std::string_view backend_name(Backend backend) {
    return backend == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace hjm::simd
