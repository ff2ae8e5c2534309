#pragma once

// Reproducible uniform deviates: mt19937_64 (fully specified by the standard)
// with the top 53 bits mapped to [0, 1). std::uniform_real_distribution is
// implementation-defined, so it is avoided wherever output must be portable.

#include <cstdint>
#include <random>

namespace cfmm {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1); zero draws are rejected.
  double uniform_open() {
    double u;
    do u = uniform();
    while (u == 0.0);
    return u;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cfmm
