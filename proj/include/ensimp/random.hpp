#pragma once

#include <cstdint>

#include "normal.hpp"

namespace ensimp {

namespace detail {

// SplitMix64 finalizer; a bijection on 64-bit words with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Counter-based random stream: the i-th draw is a pure function of
/// (seed, key_a, key_b, i), so any draw can be reproduced independently of
/// the order or thread in which draws are made.
class CounterStream {
public:
    constexpr CounterStream(std::uint64_t seed, std::uint64_t key_a, std::uint64_t key_b = 0)
        : base_(detail::mix64(detail::mix64(detail::mix64(seed) ^ key_a) ^ key_b)) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const {
        return detail::mix64(base_ ^ detail::mix64(counter));
    }

    /// Uniform on the open interval (0, 1), on a 2^-53 lattice offset by half a step.
    constexpr double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Normal deviate by inverse-CDF transform of uniform(counter).
    double normal(std::uint64_t counter, double mean = 0.0, double sd = 1.0) const {
        return mean + sd * normal_quantile(uniform(counter));
    }

    double next_uniform() { return uniform(counter_++); }
    double next_normal(double mean = 0.0, double sd = 1.0) { return normal(counter_++, mean, sd); }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

} // namespace ensimp
