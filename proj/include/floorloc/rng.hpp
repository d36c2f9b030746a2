#pragma once

#include <cmath>
#include <cstdint>

#include "floorloc/grid.hpp"

namespace floorloc {

// Counter-based generator built from the splitmix64 finalizer. A draw is a
// pure function of (seed, stream ids, counter), so any implementation of the
// scheme below reproduces the streams bit-exactly:
//
//   mix(x):   x += 0x9E3779B97F4A7C15
//             x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
//             x = (x ^ (x >> 27)) * 0x94D049BB133111EB
//             x ^= x >> 31
//   key    =  mix(mix(mix(mix(seed) ^ a) ^ b) ^ c)
//   bits_n =  mix(key ^ (n * 0xD6E8FEB86659FD93))
//   u_n    =  ((bits_n >> 11) + 0.5) * 2^-53          in (0, 1)
//
// Stream ids (a, b, c) separate uses of the same seed, e.g. (frame, ray, 0)
// for per-ray depth noise or (frame, component, 1) for motion noise.
class StableRng {
  public:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    explicit StableRng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                       std::uint64_t c = 0)
        : key_(mix(mix(mix(mix(seed) ^ a) ^ b) ^ c)) {}

    std::uint64_t bits(std::uint64_t counter) const {
        return mix(key_ ^ (counter * 0xD6E8FEB86659FD93ull));
    }

    /// Uniform draw in the open interval (0, 1).
    double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform draw in (lo, hi).
    double uniform(std::uint64_t counter, double lo, double hi) const {
        return lo + (hi - lo) * uniform(counter);
    }

    /// Integer draw in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t counter, std::uint64_t n) const {
        return bits(counter) % n;
    }

    /// Laplace(0, scale) via inverse CDF; one counter per draw.
    double laplace(std::uint64_t counter, double scale) const {
        const double u = uniform(counter) - 0.5;
        const double s = u < 0.0 ? -1.0 : 1.0;
        return -scale * s * std::log1p(-2.0 * std::abs(u));
    }

    /// Standard normal via Box-Muller; consumes counters 2k and 2k+1.
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

  private:
    std::uint64_t key_;
};

}  // namespace floorloc
