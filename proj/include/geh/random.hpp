#pragma once

#include <cstdint>
#include <random>

namespace geh {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed and a counter, so any derived stream can be replayed alone.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for stream `counter` under `purpose`. Purposes keep the split,
/// fold assignment and per-instance resampling streams disjoint.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose,
                                    std::uint64_t counter) noexcept {
    return splitmix64(splitmix64(master ^ splitmix64(purpose)) + counter);
}

namespace seed_purpose {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kFolds = 2;
inline constexpr std::uint64_t kFoldRebalance = 3;
inline constexpr std::uint64_t kInstance = 4;
inline constexpr std::uint64_t kHoldout = 5;
inline constexpr std::uint64_t kSynth = 6;
}  // namespace seed_purpose

}  // namespace geh
