#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace longdep {

/// Unbiased draw in [0, bound] from the raw mt19937_64 stream. Avoids
/// std::uniform_int_distribution, whose output differs between standard libraries.
inline std::uint64_t uniform_upto(std::mt19937_64& rng, std::uint64_t bound) {
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    if (bound == kMax) return rng();
    const std::uint64_t range = bound + 1;
    const std::uint64_t limit = kMax - kMax % range;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % range;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_upto(rng, i - 1));
        std::swap(v[i - 1], v[j]);
    }
}

/// SplitMix64 finalizer, for deriving independent seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace longdep
