#pragma once

#include <cmath>
#include <cstdint>

namespace msdarcy {

/// Counter-friendly 64-bit mixer (splitmix64 finalizer).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic pseudo-random stream. The distributions are implemented
/// here rather than taken from <random> so that sequences are identical
/// across standard library implementations; seeded runs are part of the
/// regression surface.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0x5bf0f2b9d0c5a3e1ULL)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    double normal() {
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

/// Independent per-index stream: order of evaluation does not matter.
inline Rng indexed_rng(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix64(seed) ^ mix64(0x853c49e6748fea9bULL + index));
}

}  // namespace msdarcy
