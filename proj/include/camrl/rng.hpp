#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "camrl/vec2.hpp"

namespace camrl {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= kFnvPrime;
    }
    return h;
}

// Deterministic RNG. All randomness in the project flows from one root seed
// through named sub-streams so components can be reseeded independently.
// Distributions are hand-rolled on top of mt19937_64 output so results do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    static Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
        std::uint64_t h = fnv1a64(seed);
        h = fnv1a64(name, h);
        h = fnv1a64(index, h);
        return Rng(h);
    }

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // uniform integer in [0, n), n > 0; rejection sampling, no modulo bias
    std::uint64_t uniform_index(std::uint64_t n) {
        std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

    Vec2 unit_vector() {
        double a = uniform(0.0, 2.0 * M_PI);
        return {std::cos(a), std::sin(a)};
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace camrl
