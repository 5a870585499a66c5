#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dnc {

/// splitmix64 finalizer; the building block for every derived seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Stable sub-seed for (root, purpose, index). Independent of call order.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                                    std::uint64_t index = 0) noexcept {
    return mix64(mix64(root ^ fnv1a(purpose)) + mix64(index));
}

/// Maps 64 random bits to [0, 1) with 53-bit resolution.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Deterministic draw in [0, 1) keyed on the given values; no generator state.
constexpr double unit_draw(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                           std::string_view purpose) noexcept {
    return to_unit(derive_seed(derive_seed(a, purpose, b), purpose, c));
}

/// mt19937_64 with portable uniform/normal helpers. The std distributions are
/// implementation-defined, so generated datasets would differ across standard
/// libraries if we used them.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform() { return to_unit(engine_()); }

    /// Uniform integer in [0, bound); bound > 0. Lemire's method with rejection.
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via Box-Muller (one value per call, the pair's sine half discarded).
    double normal();

private:
    std::mt19937_64 engine_;
};

}  // namespace dnc
