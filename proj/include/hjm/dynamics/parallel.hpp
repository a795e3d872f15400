#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hjm::dynamics {

/// Worker count used when a caller passes 0.
unsigned default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Indices are split into contiguous chunks; callers store per-index results
/// and reduce them afterwards, so output never depends on scheduling.
/// The first exception thrown by a body is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

/// Sum over a fixed-shape binary tree (halves split at n/2).
double pairwise_sum(std::span<const double> x);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

/// Sample mean, standard deviation and standard error, both sums pairwise.
MeanSe mean_se(std::span<const double> x);

/// With antithetic sampling the pair averages are the independent draws.
MeanSe mean_se(std::span<const double> x, bool antithetic);

/// Values x[i * stride + offset] for i < count.
std::vector<double> strided(std::span<const double> x, std::size_t stride, std::size_t offset, std::size_t count);

}  // namespace hjm::dynamics
