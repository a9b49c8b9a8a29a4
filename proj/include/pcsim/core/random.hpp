#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "pcsim/core/units.hpp"

namespace pcsim {

/// Seeded generator with draws that do not depend on the standard library's
/// distribution implementations, so seeded outputs match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Independent stream for job `index` derived from a base seed.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 e(seq);
    return Rng(e());
  }

  std::uint64_t bits() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = uniform(-1.0, 1.0);
      v = uniform(-1.0, 1.0);
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Poisson draw; inversion for small means, normal approximation is never
  /// used so that counts stay exact.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
      const double L = std::exp(-mean);
      std::uint64_t k = 0;
      double p = uniform();
      while (p > L) {
        ++k;
        p *= uniform();
      }
      return k;
    }
    // Split large means into chunks handled by inversion.
    std::uint64_t total = 0;
    double left = mean;
    while (left > 0.0) {
      const double m = std::min(left, 25.0);
      total += poisson(m);
      left -= m;
    }
    return total;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pcsim
