#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sequency {

/**
 * Portable seeded generator.
 *
 * Raw bits come from std::mt19937_64, whose output sequence is fixed by the
 * C++ standard. The standard distributions are implementation-defined, so the
 * conversions to doubles and bounded integers are done here:
 *
 *  - uniform01(): top 53 bits of one draw scaled by 2^-53, in [0, 1).
 *  - below(n):    rejection sampling on the low multiple of n, unbiased.
 *
 * Results are therefore identical on every conforming platform.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi); returns lo exactly when lo == hi.
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent stream identified by (tag, index) under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0);

}  // namespace sequency
