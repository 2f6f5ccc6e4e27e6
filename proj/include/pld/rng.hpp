#pragma once

#include <cstdint>
#include <random>

namespace pld {

// splitmix64; used to derive independent generator seeds from a base seed
// plus a stream tag, so each consumer of randomness gets its own stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return std::mt19937_64(mix_seed(seed, stream));
}

// Round-half-up on a nonnegative real target.
inline long long round_half_up(double x) {
    return static_cast<long long>(x + 0.5);
}

} // namespace pld
