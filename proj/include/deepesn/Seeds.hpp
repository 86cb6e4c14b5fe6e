#pragma once

#include <cstdint>

namespace deepesn {

enum class SeedStream : std::uint64_t { Input = 0, Recurrent = 1, Bias = 2 };

/// SplitMix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Seed for one random stream of one layer:
///
///     splitmix64_mix(master + 0x9E3779B97F4A7C15 * (1 + 4 * layer + stream))
///
/// with stream codes input = 0, recurrent = 1, bias = 2. For a fixed master
/// seed the counter term is injective (odd multiplier) and the mix is a
/// bijection, so distinct (layer, stream) pairs never collide.
constexpr std::uint64_t derive_layer_seed(std::uint64_t master, std::uint64_t layer, SeedStream stream)
{
    return splitmix64_mix(master + kGoldenGamma * (1 + 4 * layer + static_cast<std::uint64_t>(stream)));
}

/// Sub-seed for the k-th redraw of a stream; attempt 0 is the seed itself.
constexpr std::uint64_t derive_retry_seed(std::uint64_t seed, std::uint64_t attempt)
{
    return attempt == 0 ? seed : splitmix64_mix(seed + kGoldenGamma * attempt);
}

} // namespace deepesn
