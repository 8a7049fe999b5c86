#pragma once

#include <cmath>
#include <cstdint>

namespace lapue {

// splitmix64 finalizer: bijective 64-bit mix with good avalanche.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic counter-based stream: every draw is a pure function of
// (key, counter), so samples are reproducible independent of evaluation
// order and thread count.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  // Build a stream key by folding words into splitmix64.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t k = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
    k = splitmix64(k ^ a);
    k = splitmix64(k ^ b);
    return splitmix64(k ^ c);
  }

  // Uniform draw strictly inside (0, 1).
  double next_uniform() {
    const std::uint64_t bits = splitmix64(key_ ^ (0x9e3779b97f4a7c15ULL * ++counter_));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

double normal_cdf(double x);

// Inverse standard normal CDF for u in (0,1).  Acklam's rational
// approximation polished by one Halley step against erfc-based normal_cdf;
// absolute error below 1e-13 over (1e-300, 1-1e-16).
double normal_quantile(double u);

}  // namespace lapue
