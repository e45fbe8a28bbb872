#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace sigver {

/// Deterministic PRNG used for every seeded operation in the library
/// (splits, weight init, synthetic data). The algorithm is part of the
/// file/split reproducibility contract, so it is fixed here rather than
/// delegated to std::mt19937:
///
///   state0 = splitmix64(seed), or 0x9E3779B97F4A7C15 if that is zero
///   next(): x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 0x2545F4914F6CDD1D
///
/// (xorshift64* with a splitmix64 seed scrambler.)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(scramble(seed)) {}

    std::uint64_t next() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    /// Uniform double in [0, 1), 53 usable bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound). bound must be nonzero. Plain modulo;
    /// the bias is irrelevant at the sizes used here and keeps the stream
    /// reproducible across implementations.
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

    /// Standard normal via Box-Muller (consumes two draws).
    double normal();

    /// In-place Fisher-Yates: for i = n-1 .. 1, swap(a[i], a[below(i+1)]).
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t scramble(std::uint64_t seed) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z != 0 ? z : 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t state_;
};

inline double Rng::normal() {
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = uniform();
    if (u < 1e-300) u = 1e-300;
    double v = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u)) * std::cos(two_pi * v);
}

} // namespace sigver
