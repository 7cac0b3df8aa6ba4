#pragma once

#include <cstdint>
#include <string_view>

namespace qimrag {

/// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// The splitmix64 generator (Steele, Lea and Flood). Every random stream in the
/// project is one of these, so output is identical on every platform.
class SplitMix64 {
public:
    static constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

    explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    constexpr std::uint64_t next() noexcept {
        state_ += golden_gamma;
        return mix64(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double next_unit() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [-1, 1).
    constexpr double next_signed_unit() noexcept { return 2.0 * next_unit() - 1.0; }

    /// Uniform integer in [0, bound). bound must be nonzero.
    constexpr std::uint64_t next_below(std::uint64_t bound) noexcept {
        // Rejecting the low (2^64 mod bound) outputs removes modulo bias.
        const std::uint64_t threshold = (0 - bound) % bound;
        while (true) {
            const std::uint64_t r = next();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

    constexpr std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// Derives an independent stream seed from a root seed and a sequence of keys.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t key) noexcept {
    return mix64(root + SplitMix64::golden_gamma * (key + 1));
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t hash = 0xCBF29CE484222325ULL) noexcept {
    for (const char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

}  // namespace qimrag
