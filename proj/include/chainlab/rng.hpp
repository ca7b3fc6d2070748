// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_RNG_HPP
#define CHAINLAB_RNG_HPP

#include <cstdint>
#include <random>

namespace chainlab {

/// Seeded generator with portable double extraction (std::uniform_real_distribution
/// is implementation-defined; bit-identical records need fixed arithmetic).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double unit() { return double(gen_() >> 11) * 0x1.0p-53; }

    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Uniform in {0, ..., n-1} by rejection-free modulo (bias negligible at
    /// our sizes, determinism is what matters here).
    std::uint64_t index(std::uint64_t n) { return gen_() % n; }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace chainlab

#endif  // CHAINLAB_RNG_HPP
