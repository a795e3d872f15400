#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace hjm::dynamics {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al.). Stateless: the output is a pure
/// function of (counter, key), which is what makes per-path streams
/// independent of scheduling.
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

/// SplitMix64 finaliser, used to spread seeds and ids over the key space.
std::uint64_t mix64(std::uint64_t x);

/// Key of an outer path.
PhiloxKey path_key(std::uint64_t seed, std::uint64_t path);
/// Key of an inner (nested) path started at time index `step` from outer
/// path `outer`.
PhiloxKey inner_key(std::uint64_t seed, std::uint64_t outer, std::uint64_t step, std::uint64_t inner);

/// Gaussian increments of one path. Step l, factor k is a pure function of
/// (key, l, k). A mirrored stream returns the negated values (antithetic
/// partner).
class NoiseStream {
public:
    NoiseStream(PhiloxKey key, bool mirrored = false) : key_(key), sign_(mirrored ? -1.0 : 1.0) {}

    /// Standard normals for step l into out (one per factor). Lanes give
    /// further independent draws for the same step.
    void normals(std::uint32_t step, std::span<double> out, std::uint32_t lane = 0) const;

private:
    PhiloxKey key_;
    double sign_;
};

/// Stream for path `path` of a run; with antithetic sampling, paths 2p and 2p+1
/// share a key and the odd one is mirrored.
NoiseStream path_stream(std::uint64_t seed, std::uint64_t path, bool antithetic);
NoiseStream inner_stream(std::uint64_t seed, std::uint64_t outer, std::uint64_t step, std::uint64_t inner,
                         bool antithetic);

}  // namespace hjm::dynamics
