#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace udsgd {

// Deterministic random-number plumbing.
//
// All stochastic components draw from explicitly seeded streams derived from
// the master seed plus a lane/slot pair (agent index, trial index, ...), so a
// run is reproducible bit-for-bit regardless of how work is scheduled across
// threads. Distributions are implemented here rather than taken from
// <random> because the standard leaves distribution algorithms
// implementation-defined and we promise byte-identical output files.

inline std::uint64_t mix64(std::uint64_t z) {
  // splitmix64 finalizer; full avalanche.
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stable stream derivation: (master, lane, slot) -> independent 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t lane,
                                 std::uint64_t slot = 0) {
  std::uint64_t h = mix64(master + 0x9e3779b97f4a7c15ull);
  h = mix64(h ^ (lane + 0xbf58476d1ce4e5b9ull));
  h = mix64(h ^ (slot + 0x94d049bb133111ebull));
  return h;
}

// xoshiro256++ with splitmix64 seeding. Small, fast, copyable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) {
      sm += 0x9e3779b97f4a7c15ull;
      w = mix64(sm);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53 random bits.
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1]; safe as a log() argument.
  double next_unit_pos() { return 1.0 - next_unit(); }

  // Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  int next_index(int n) { return int(next_below(std::uint64_t(n))); }

  // Standard normal via Box-Muller; second deviate cached.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = next_unit_pos();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape < 1 uses the boost
  // Gamma(shape+1) * U^(1/shape).
  double next_gamma(double shape) {
    assert(shape > 0.0);
    if (shape < 1.0) {
      const double u = next_unit_pos();
      return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = next_normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = next_unit_pos();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // In-place Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = std::size_t(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace udsgd
