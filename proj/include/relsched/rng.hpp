#pragma once

#include <cstdint>
#include <random>

namespace relsched {

/// splitmix64 step; used to derive independent sub-seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic sub-seed for stream `index` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
    splitmix64(s);
    return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64{seed};
}

} // namespace relsched
