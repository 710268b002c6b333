#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace reldet {

// splitmix64 generator. Small, seedable, and identical output everywhere,
// which keeps every seeded run byte-reproducible.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Independent stream for item `index` under a common seed.
  static Rng for_index(std::uint64_t seed, std::uint64_t index) {
    Rng r(seed + 0x9e3779b97f4a7c15ULL * (index + 1));
    r.next_u64();
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Box-Muller normal draw.
  double normal(double mean, double stddev) {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + stddev * z;
  }

  // Normal draw clipped to mean +/- bound*stddev, so noise cannot eat a
  // placement margin.
  double bounded_normal(double mean, double stddev, double bound) {
    double z = normal(0.0, stddev);
    double cap = bound * stddev;
    if (z > cap) z = cap;
    if (z < -cap) z = -cap;
    return mean + z;
  }

  // Fisher-Yates shuffle of the index range [0, n).
  std::vector<int> shuffled_indices(int n) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(idx[i], idx[j]);
    }
    return idx;
  }

private:
  std::uint64_t state_;
};

}  // namespace reldet
