#pragma once

#include <cmath>
#include <cstdint>

namespace cspat {

// SplitMix64: the single random generator used everywhere randomness is
// needed (Bernoulli matrices, noise, phantom generation, weight init,
// shuffles).  Counter-based and 64-bit, so any implementation that follows
// the recipe below reproduces our streams bit for bit:
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   output = z ^ (z >> 31)
// Doubles take the top 53 bits into [0,1); Gaussians use Box-Muller on two
// consecutive doubles; sign draws use the top bit.
class SplitMix64 {
  public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1), 53-bit resolution.
    double next_double() { return double(next() >> 11) * 0x1.0p-53; }

    // +1 or -1 with equal probability (top bit).
    double next_sign() { return (next() >> 63) ? -1.0 : 1.0; }

    // Standard normal via Box-Muller; consumes exactly two draws.
    double next_gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, n), n > 0.  Simple rejection-free scaling is
    // fine here: bias is < n / 2^53 which is negligible for our n.
    uint64_t next_below(uint64_t n) {
        return uint64_t(next_double() * double(n)) % n;
    }

  private:
    uint64_t state_;
};

}  // namespace cspat
