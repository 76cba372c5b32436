#pragma once

#include <cstdint>
#include <string_view>

namespace tabppo {

/// Derives an independent seed for a named sub-stream ("split", "init",
/// "sampling", "shuffle") so every consumer of randomness is reproducible
/// from a single run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = seed ^ h;  // splitmix64 finaliser
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace tabppo
