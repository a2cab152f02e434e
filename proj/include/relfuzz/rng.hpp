/// Seed derivation shared by every seeded stage.
#pragma once

#include <cstdint>
#include <random>

namespace relfuzz {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent stream `stream` of a base seed, e.g. (campaign seed, round index).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
{
    return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

/// Uniform value in [0, n).
inline std::uint64_t uniform_below(Rng &rng, std::uint64_t n)
{
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace relfuzz
