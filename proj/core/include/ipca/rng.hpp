#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ipca {

// Seeded generator with explicit uniform/normal transforms. The standard
// distributions are implementation-defined, so golden values frozen in tests
// and byte-identical CLI reruns would not survive a libstdc++ upgrade;
// Box-Muller over the raw mt19937_64 stream is stable everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw (Box-Muller, cached pair).
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n), n > 0. Rejection sampling, unbiased.
  int uniform_int(int n) {
    const uint64_t bound = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return static_cast<int>(draw % bound);
  }

  uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// In-place Fisher-Yates shuffle driven by the portable generator.
template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (int i = static_cast<int>(values.size()) - 1; i > 0; --i) {
    std::swap(values[static_cast<size_t>(i)],
              values[static_cast<size_t>(rng.uniform_int(i + 1))]);
  }
}

}  // namespace ipca
