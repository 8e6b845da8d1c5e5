#pragma once

#include <cmath>
#include <cstdint>

namespace mxai {

// Deterministic RNG with cheap stream derivation. Every parallel unit of work
// (tree, fold, household, sample) draws from its own stream derived from the
// run seed plus stable indices, so results do not depend on thread count.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {
    // warm up so nearby seeds decorrelate
    next_u64();
    next_u64();
  }

  static Rng stream(uint64_t seed, uint64_t a, uint64_t b = 0) {
    uint64_t s = mix(seed);
    s = mix(s ^ (a + 0x9e3779b97f4a7c15ULL));
    s = mix(s ^ (b + 0xbf58476d1ce4e5b9ULL));
    return Rng(s);
  }

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // unbiased integer in [0, n)
  uint64_t uniform_below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // standard normal via Box-Muller (one value per call, cache discarded)
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t state_;
};

constexpr uint64_t kDefaultSeed = 7919;

}  // namespace mxai
