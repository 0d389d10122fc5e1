#pragma once

#include <cstdint>
#include <initializer_list>

namespace amol {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child seed for a named stream. Every random stream in the library is
/// derive_seed(user_seed, {stream tag, index...}).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(seed);
    for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

namespace stream {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t scenario = 2;
inline constexpr std::uint64_t test = 3;
inline constexpr std::uint64_t folds = 4;
inline constexpr std::uint64_t replicate = 5;
}  // namespace stream

}  // namespace amol
