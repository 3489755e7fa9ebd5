#pragma once

/// @file
/// Counter-based random number generation. Every draw is a pure function of
/// (key, counter), so lattice sites and Monte Carlo replicates can be
/// evaluated in any order, on any number of threads, with bit-identical
/// results. The mixer is the splitmix64 finalizer over a Weyl sequence.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rfx {

inline constexpr const char* kRngAlgorithm = "splitmix64-counter";

namespace detail {

inline constexpr std::uint64_t kWeylGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

} // namespace detail

/// Derives an independent stream key from a master seed. Used for
/// per-replicate and per-purpose stream splitting.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return detail::mix64(master + (stream + 1) * detail::kWeylGamma);
}

/// Stateless keyed generator: output i is mix64(key + (i+1)*gamma).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed)
        : key_(detail::mix64(seed ^ 0xA02BDBF7BB3C0A7ULL)) {}

    std::uint64_t bits(std::uint64_t counter) const {
        return detail::mix64(key_ + (counter + 1) * detail::kWeylGamma);
    }

    /// Uniform draw in the open interval (0,1).
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    /// Standard normal via Box-Muller; consumes counters 2c and 2c+1.
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Unit Pareto with tail index alpha: P(X > x) = x^{-alpha}, x >= 1.
    double pareto(std::uint64_t counter, double alpha) const {
        return std::pow(uniform(counter), -1.0 / alpha);
    }

    /// Unit Frechet: P(X <= x) = exp(-1/x), x > 0.
    double frechet(std::uint64_t counter) const {
        return -1.0 / std::log(uniform(counter));
    }

private:
    std::uint64_t key_;
};

} // namespace rfx
