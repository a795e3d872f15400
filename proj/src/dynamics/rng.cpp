#include "hjm/dynamics/rng.hpp"

#include <cmath>
#include <numbers>

namespace hjm::dynamics {
namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

PhiloxKey split(std::uint64_t k) {
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

// (0, 1) with 53 random bits
inline double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey k) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kW0;
            k[1] += kW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

PhiloxKey path_key(std::uint64_t seed, std::uint64_t path) {
    return split(mix64(mix64(seed) ^ mix64(path + 0x5851F42D4C957F2Dull)));
}

PhiloxKey inner_key(std::uint64_t seed, std::uint64_t outer, std::uint64_t step, std::uint64_t inner) {
    std::uint64_t h = mix64(seed ^ 0xD1B54A32D192ED03ull);
    h = mix64(h ^ outer);
    h = mix64(h ^ (step + 0x8CB92BA72F3D8DD7ull));
    h = mix64(h ^ inner);
    return split(h);
}

void NoiseStream::normals(std::uint32_t step, std::span<double> out, std::uint32_t lane) const {
    const std::size_t n = out.size();
    for (std::size_t b = 0; 2 * b < n; ++b) {
        const PhiloxCounter r = philox4x32({step, static_cast<std::uint32_t>(b), lane, 0u}, key_);
        const double u1 = to_unit(r[0], r[1]);
        const double u2 = to_unit(r[2], r[3]);
        const double rad = sign_ * std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        out[2 * b] = rad * std::cos(theta);
        if (2 * b + 1 < n) out[2 * b + 1] = rad * std::sin(theta);
    }
}

NoiseStream path_stream(std::uint64_t seed, std::uint64_t path, bool antithetic) {
    if (!antithetic) return NoiseStream(path_key(seed, path));
    return NoiseStream(path_key(seed, path / 2), path % 2 == 1);
}

NoiseStream inner_stream(std::uint64_t seed, std::uint64_t outer, std::uint64_t step, std::uint64_t inner,
                         bool antithetic) {
    if (!antithetic) return NoiseStream(inner_key(seed, outer, step, inner));
    return NoiseStream(inner_key(seed, outer, step, inner / 2), inner % 2 == 1);
}

}  // namespace hjm::dynamics
