#pragma once

#include <cstdint>
#include <random>

namespace spdnn {

/// splitmix64 step; used to whiten seeds and derive independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d49bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a 64-bit stream seed from (master_seed, stream_index).
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64(s);
    s ^= stream_index * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL;
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x165667b19e3779f9ULL + (a << 6) + (a >> 2));
}

/// Engine used everywhere: mt19937_64 seeded through derive_seed.
/// Draws are bit-deterministic for a fixed (master_seed, stream_index)
/// within one build of this library.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t stream_index) {
    return std::mt19937_64(derive_seed(master_seed, stream_index));
}

inline double uniform01(std::mt19937_64& g) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(g);
}

inline double uniform_in(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

} // namespace spdnn
