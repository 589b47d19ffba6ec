#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "fvk/common.hpp"

namespace fvk {

// Deterministic generator. mt19937_64 has a standard-specified sequence, and
// all distributions are derived here by hand because the std distribution
// objects are implementation-defined and would break reproducibility across
// standard libraries.
class Rng {
 public:
  explicit Rng(u64 seed) : eng_(seed) {}

  u64 next_u64() { return eng_(); }

  // [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  u64 below(u64 n) {
    if (n == 0) throw ValueError("Rng::below: n must be positive");
    const u64 limit = UINT64_MAX - UINT64_MAX % n;
    u64 x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (one value per call).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace fvk
