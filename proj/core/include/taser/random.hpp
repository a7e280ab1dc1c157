#pragma once

#include <cstdint>
#include <random>

namespace taser {

// Streams are decorrelated by hashing the context (node, round, purpose) into
// the engine seed rather than by sharing one global engine. This keeps every
// draw reproducible under any execution order of the nodes.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a) {
    return splitmix64(seed ^ splitmix64(a));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
    return mix_seed(mix_seed(seed, a, b), c);
}

// Stream tags keep independent uses of randomness within the same (node, round)
// context from accidentally colliding.
namespace stream {
inline constexpr std::uint64_t kInit = 0x11;
inline constexpr std::uint64_t kPartition = 0x22;
inline constexpr std::uint64_t kBatch = 0x33;
inline constexpr std::uint64_t kNoise = 0x44;
inline constexpr std::uint64_t kTopology = 0x55;
inline constexpr std::uint64_t kRoles = 0x66;
inline constexpr std::uint64_t kData = 0x77;
}  // namespace stream

inline std::mt19937_64 make_engine(std::uint64_t mixed_seed) {
    return std::mt19937_64(mixed_seed);
}

}  // namespace taser
