#include "hjm/dynamics/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace hjm::dynamics {

unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = default_threads();
    const std::size_t workers = std::min<std::size_t>(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = n * w / workers;
        const std::size_t hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double acc = 0.0;
        for (double v : x) acc += v;
        return acc;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

MeanSe mean_se(std::span<const double> x) {
    MeanSe out;
    out.n = x.size();
    if (x.empty()) return out;
    out.mean = pairwise_sum(x) / static_cast<double>(x.size());
    if (x.size() < 2) return out;
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = (x[i] - out.mean) * (x[i] - out.mean);
    out.sd = std::sqrt(pairwise_sum(dev) / static_cast<double>(x.size() - 1));
    out.se = out.sd / std::sqrt(static_cast<double>(x.size()));
    return out;
}

MeanSe mean_se(std::span<const double> x, bool antithetic) {
    if (!antithetic) return mean_se(x);
    std::vector<double> pairs(x.size() / 2);
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = 0.5 * (x[2 * i] + x[2 * i + 1]);
    MeanSe out = mean_se(pairs);
    // a lone trailing path (odd count) is dropped from the estimate
    return out;
}

std::vector<double> strided(std::span<const double> x, std::size_t stride, std::size_t offset, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = x[i * stride + offset];
    return out;
}

}  // namespace hjm::dynamics
