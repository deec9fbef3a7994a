#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fsdml {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Counter-based seed derivation. Every random stream in the library is
/// obtained as derive_seed(parent, "name", index) so that sub-components
/// draw from independent, reproducible streams regardless of call order.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream,
                                    std::uint64_t index = 0) noexcept
{
    return mix64(mix64(parent ^ fnv1a64(stream)) + index);
}

inline Rng make_rng(std::uint64_t parent, std::string_view stream, std::uint64_t index = 0)
{
    return Rng{derive_seed(parent, stream, index)};
}

} // namespace fsdml
