#pragma once

#include <cmath>
#include <cstdint>

namespace crcsim {

// Self-contained 64-bit generator (splitmix64). The standard distributions
// are implementation-defined, so everything random in the simulator goes
// through this class to keep traces reproducible byte-for-byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53 significant bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Knuth's product method for small means; Gaussian approximation above 64
  // where the relative error is negligible and product sampling would cost
  // O(mean) uniforms per draw.
  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 64.0) {
      const double draw = mean + std::sqrt(mean) * gaussian();
      return draw <= 0.0 ? 0 : static_cast<std::int64_t>(std::llround(draw));
    }
    return poisson_knuth(std::exp(-mean));
  }

  // Same draw with exp(-mean) cached by the caller (mean must be in (0, 64]).
  std::int64_t poisson_with_limit(double mean, double exp_neg_mean) {
    if (mean <= 0.0) return 0;
    if (mean > 64.0) {
      const double draw = mean + std::sqrt(mean) * gaussian();
      return draw <= 0.0 ? 0 : static_cast<std::int64_t>(std::llround(draw));
    }
    return poisson_knuth(exp_neg_mean);
  }

  double gaussian() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Derives an independent stream, e.g. one per (seed, purpose) pair.
  Rng fork(std::uint64_t stream) const {
    Rng r(state_ ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    r.next_u64();
    return r;
  }

 private:
  std::int64_t poisson_knuth(double limit) {
    std::int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= next_unit();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t state_;
};

}  // namespace crcsim
