#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace occfm {

// Deterministic 64-bit generator (splitmix64). Hand-rolled so that seeded
// streams, shuffles and draws are bit-identical across platforms and
// standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection-free multiply-shift bound.
  std::uint64_t below(std::uint64_t n) {
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller; caches the second draw.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // Fisher-Yates over [first, last).
  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::uint64_t j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

  // Unit vector with uniform(-1, 1) entries, normalized; re-draws the
  // (measure-zero) all-zero case.
  std::vector<double> unit_vector(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double norm = 0.0;
    while (norm == 0.0) {
      for (auto& x : v) x = uniform(-1.0, 1.0);
      norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
    }
    for (auto& x : v) x /= norm;
    return v;
  }

  // Stable seed derivation for sub-streams (fold parts into the state hash).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
    Rng r(seed);
    std::uint64_t h = r.next_u64();
    h ^= Rng(a ^ 0x517cc1b727220a95ULL).next_u64();
    h = (h ^ (h >> 29)) * 0xff51afd7ed558ccdULL;
    h ^= Rng(b ^ 0x2545f4914f6cdd1dULL).next_u64();
    h = (h ^ (h >> 32)) * 0xc4ceb9fe1a85ec53ULL;
    h ^= Rng(c ^ 0x9e3779b97f4a7c15ULL).next_u64();
    return h ^ (h >> 31);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace occfm
