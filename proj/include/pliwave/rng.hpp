#pragma once

// Deterministic random number generation for the synthesis modules.
//
// std::mt19937_64 output is pinned by the standard, but the standard
// distributions are not; every generator here derives its variates from raw
// engine words so that a given (config, seed) pair reproduces bit-identical
// signals on any conforming platform.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace pliwave {

// Stateless 64-bit mixer (splitmix64 finalizer). Used to derive independent
// sub-seeds from a master seed without correlating the streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return mix_seed(a ^ mix_seed(b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller. No cached spare: two engine draws per
    // variate keeps the consumption pattern independent of call history.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double gaussian(double mean, double stddev) {
        return mean + stddev * gaussian();
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace pliwave
