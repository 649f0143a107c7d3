#pragma once

#include <cstdint>
#include <random>

namespace streamalloc {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent per-replication seeds.
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index)
{
    return mix64(mix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p)
{
    return uniform01(rng) < p;
}

/// Uniform integer in [0, k) by rejection, so the law does not depend on the library.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t k)
{
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % k);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % k;
}

}  // namespace streamalloc
