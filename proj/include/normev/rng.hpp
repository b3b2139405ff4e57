#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace normev {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded random source with fully specified draw semantics.
///
/// mt19937_64 output is pinned by the standard, but the std distribution
/// classes are not; all draws below are implemented directly so that a seed
/// reproduces the exact same run everywhere.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  // Derives an independent stream from a master seed (one per simulation).
  SeededRng(std::uint64_t masterSeed, std::uint64_t stream)
      : gen_(splitmix64(splitmix64(masterSeed) ^
                        splitmix64(stream * 0x9e3779b97f4a7c15ULL + 0x1234567))) {}

  std::uint64_t nextU64() { return gen_(); }

  // Uniform in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::below: n must be positive");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t v = gen_();
    while (v >= limit) v = gen_();
    return v % n;
  }

  int intBelow(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  // Uniform in [0, 1), 53 random bits.
  double real01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return real01() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    if (v.empty()) throw std::invalid_argument("SeededRng::pick: empty vector");
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace normev
