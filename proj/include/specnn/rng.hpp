#ifndef SPECNN_RNG_HPP
#define SPECNN_RNG_HPP

#include <cstdint>
#include <random>

namespace specnn {

using Rng = std::mt19937_64;

// Derive an independent stream from a run seed (splitmix64 mixing), so that
// e.g. shuffling and initialization do not share a generator.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace specnn

#endif
