#pragma once

#include <cstdint>
#include <random>

namespace phasorflow {

/// SplitMix64 finalizer, used to derive independent per-cell seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// mt19937_64 stream for grid cell `cell` of a run seeded with `seed`.
/// The engine is fully specified by the standard, so streams match across platforms.
inline std::mt19937_64 cell_stream(std::uint64_t seed, std::uint64_t cell) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(cell)));
}

/// Uniform double in [0, 1) from the top 53 bits. Written out by hand because
/// std::uniform_real_distribution is not portable across standard libraries.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace phasorflow
