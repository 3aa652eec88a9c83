#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fedgem {

// Deterministic seed fan-out. Every random stream in a run is derived from the
// master seed plus a label and index, so results do not depend on which thread
// runs which client or in what order.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Stable 64-bit hash of (seed, label, indices...). Not std::hash: we need the
/// same stream layout on every platform and run.
inline std::uint64_t hash_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = detail::splitmix64(seed);
    for (char c : label) h = detail::splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return detail::splitmix64(h);
}

inline std::uint64_t hash_seed(std::uint64_t seed, std::string_view label, std::uint64_t a) {
    return detail::splitmix64(hash_seed(seed, label) ^ detail::splitmix64(a));
}

inline std::uint64_t hash_seed(std::uint64_t seed, std::string_view label,
                               std::uint64_t a, std::uint64_t b) {
    return detail::splitmix64(hash_seed(seed, label, a) ^ detail::splitmix64(b ^ 0x5851f42d4c957f2dULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view label) {
    return Rng(hash_seed(seed, label));
}

inline Rng make_rng(std::uint64_t seed, std::string_view label, std::uint64_t a) {
    return Rng(hash_seed(seed, label, a));
}

inline Rng make_rng(std::uint64_t seed, std::string_view label, std::uint64_t a, std::uint64_t b) {
    return Rng(hash_seed(seed, label, a, b));
}

}  // namespace fedgem
