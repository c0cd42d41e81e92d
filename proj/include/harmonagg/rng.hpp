#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace harmonagg {

// All randomized components draw from std::mt19937_64 through the helpers
// below, so a run is fully determined by its seed on any platform that
// implements the same generator.
using Rng = std::mt19937_64;

inline constexpr std::string_view kRngId = "mt19937_64";

// splitmix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed-split rule: child seed = mix64 folded over (master, words...).
// Independent streams for experiment cells derive from this.
template <class... Words>
constexpr std::uint64_t derive_seed(std::uint64_t master, Words... words) {
    std::uint64_t s = mix64(master);
    ((s = mix64(s ^ static_cast<std::uint64_t>(words))), ...);
    return s;
}

// Uniform integer in [0, n) by rejection on the low bits; avoids the
// distribution-object portability gap between standard libraries.
inline std::uint64_t bounded(Rng& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + uniform01(rng) * (hi - lo);
}

// Index draw proportional to non-negative weights; caller guarantees a
// positive total.
inline std::size_t weighted_index(Rng& rng, std::span<const double> weights,
                                  double total) {
    double r = uniform01(rng) * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = i;
        if (r < weights[i]) return i;
        r -= weights[i];
    }
    return last_positive;
}

} // namespace harmonagg
