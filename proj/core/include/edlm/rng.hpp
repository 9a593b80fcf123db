#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace edlm {

/// Seeded random source used everywhere reproducibility matters.
///
/// std::mt19937_64 has a sequence fully specified by the standard; the
/// distributions below are hand-rolled because the standard library's
/// distribution objects are implementation-defined and would break
/// bit-reproducibility across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % bound;
    }

    int below_int(int bound) { return static_cast<int>(below(static_cast<std::uint64_t>(bound))); }

    /// Uniform double in [0, 1), 53 bits.
    double real01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) { return lo + below_int(hi - lo + 1); }

    /// Normal(mean, stddev) via Box-Muller. Two uniforms per draw, no
    /// cached state, so the output is a pure function of the engine state.
    double normal(double mean, double stddev) {
        const double u1 = 1.0 - real01();  // (0, 1], keeps log finite
        const double u2 = real01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace edlm
