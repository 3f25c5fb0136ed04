#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

#include "rosae/error.hpp"

namespace rosae {

/// SplitMix64 step; advances `state` and returns the next output word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from `seed` for stream index `stream`.
/// The same (seed, stream) pair always yields the same child seed.
inline std::uint64_t seed_split(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
    splitmix64(state);
    return splitmix64(state);
}

/// Labeled variant: derives the stream index from a stage name, so that
/// independent pipeline stages ("init", "train", "tac-test", ...) never
/// share a random stream even when they share a base seed.
inline std::uint64_t seed_split(std::uint64_t seed, std::string_view label) {
    // FNV-1a over the label bytes.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return seed_split(seed, h);
}

/// Deterministic random source. All draws are derived from raw mt19937_64
/// output words with fixed arithmetic, so sequences are identical across
/// platforms and standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased uniform index in [0, n). Rejection sampling, no modulo bias.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) {
            throw InvalidArgument("Rng::uniform_index: n must be positive");
        }
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
        std::uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return static_cast<std::size_t>(x % bound);
    }

    /// Standard normal deviate via Box-Muller (one fresh pair per call).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[uniform_index(i)]);
        }
    }

    /// Draws k distinct elements from `pool` uniformly at random, in draw order.
    template <typename T>
    std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k) {
        if (k > pool.size()) {
            throw InvalidArgument("Rng::sample_without_replacement: k exceeds pool size");
        }
        std::vector<T> picked;
        picked.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
            picked.push_back(pool[i]);
        }
        return picked;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace rosae
