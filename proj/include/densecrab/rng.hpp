#pragma once

#include <cstdint>
#include <random>

namespace densecrab {

/// Deterministic random source. All draws are hand-mapped from raw
/// mt19937_64 output so streams are identical across standard library
/// implementations (the distributions in <random> are not portable).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound), bound > 0. Rejection sampling, unbiased.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    double real01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return real01() < p; }

    /// Standard normal deviate (Box-Muller, pair cached).
    double normal();

    /// Derives an independent stream; distinct tags give distinct streams.
    Rng fork(std::uint64_t tag) {
        return Rng(next_u64() ^ (tag * 0x9e3779b97f4a7c15ull));
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace densecrab
