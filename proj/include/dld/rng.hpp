#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace dld {

/// Uniform double in [0, 1) from the 53 high bits of a 64-bit draw.
inline double uniform01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// Bounded draw in [0, n) by multiply-shift (independent of <random> distributions).
inline std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Deterministic index permutation (Fisher-Yates over a 64-bit Mersenne twister).
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[bounded(rng, i)]);
    return idx;
}

}  // namespace dld
