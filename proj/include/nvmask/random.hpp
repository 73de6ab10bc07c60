#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nvmask {

/// Engine used for every stochastic draw in the toolkit.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b)
{
    return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

/// Stream domains keep independent consumers of one seed from sharing draws.
enum class Domain : std::uint64_t {
    bca_ion = 1,
    hole = 2,
    cell = 3,
    window = 4,
    t2_draw = 5,
    fit = 6,
    synth = 7,
};

/// Counter-based substream: the state depends only on (seed, domain, a, b),
/// never on how many draws other streams have made. This is what makes
/// parallel runs reproducible for any thread count.
inline Rng substream(std::uint64_t seed, Domain domain, std::uint64_t a, std::uint64_t b = 0)
{
    std::uint64_t k = hash_combine(seed, static_cast<std::uint64_t>(domain));
    k = hash_combine(k, a);
    k = hash_combine(k, b);
    return Rng(k);
}

/// Uniform in [0, 1). Independent of the standard library's distribution
/// implementation so outputs are portable across toolchains.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal deviate by the Box-Muller transform (no cached pair, so
/// the number of engine calls per draw is fixed).
inline double standard_normal(Rng& rng)
{
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace nvmask
