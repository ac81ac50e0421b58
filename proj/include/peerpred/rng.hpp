#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace peerpred {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/// Stable child seed for (master, component tag, index). Independent of call order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) noexcept {
    return detail::splitmix64(detail::splitmix64(master ^ detail::fnv1a(tag)) + index);
}

inline Rng make_rng(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
    return Rng{derive_seed(master, tag, index)};
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t size) {
    return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
}

/// Inverse-CDF draw from a discrete distribution given as weights summing to ~1.
inline std::size_t sample_discrete(Rng& rng, std::span<const double> probs) {
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        acc += probs[k];
        last_positive = k;
        if (u < acc) return k;
    }
    return last_positive;
}

}  // namespace peerpred
