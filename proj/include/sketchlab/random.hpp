#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace sketchlab {

// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Keyed bijection of the counter: for a fixed key, distinct counters give distinct words.
constexpr std::uint64_t keyed_u64(std::uint64_t key, std::uint64_t counter) noexcept {
    return mix64(mix64(counter ^ key) + key);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label, std::uint64_t index = 0) noexcept {
    return mix64(keyed_u64(seed, label) ^ mix64(index + 0x9e3779b97f4a7c15ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) noexcept {
    return derive_seed(seed, hash_label(label), index);
}

// (0, 1], 53-bit resolution.
inline double unit_open(std::uint64_t x) noexcept {
    return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

// [0, 1), 53-bit resolution.
inline double unit_closed_open(std::uint64_t x) noexcept {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Uniform in [0, bound) by multiply-high.
inline std::uint64_t scale_below(std::uint64_t x, std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * bound) >> 64);
}

// Gaussians are rounded to this dyadic grid so that sums of a few million of them are exact.
inline constexpr int kGaussianGridBits = 32;

inline double quantize_gaussian(double z) noexcept {
    return std::ldexp(std::nearbyint(std::ldexp(z, kGaussianGridBits)), -kGaussianGridBits);
}

// Standard normal at position `index` of the stream keyed by `key`.
// Positions 2k and 2k+1 share one Box-Muller draw (cos / sin halves).
inline double gaussian_at(std::uint64_t key, std::uint64_t index) noexcept {
    const std::uint64_t base = index & ~std::uint64_t{1};
    const double u1 = unit_open(keyed_u64(key, base));
    const double u2 = unit_closed_open(keyed_u64(key, base + 1));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    const double z = (index & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
    return quantize_gaussian(z);
}

// Sequential view over a counter-based stream.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept
        : key_(key), gaussian_key_(derive_seed(key, std::string_view("gaussian"))) {}

    std::uint64_t next_u64() noexcept { return keyed_u64(key_, counter_++); }
    double uniform01() noexcept { return unit_closed_open(next_u64()); }
    std::uint64_t below(std::uint64_t bound) noexcept { return scale_below(next_u64(), bound); }
    bool bernoulli(double p) noexcept { return uniform01() < p; }
    double gaussian() noexcept {
        const double z = gaussian_at(gaussian_key_, gaussian_counter_);
        ++gaussian_counter_;
        return z;
    }
    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t gaussian_key_;
    std::uint64_t counter_ = 0;
    std::uint64_t gaussian_counter_ = 0;
};

}  // namespace sketchlab
