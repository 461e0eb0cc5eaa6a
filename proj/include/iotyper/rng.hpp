// Copyright 2026 The iotyper Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef IOTYPER_RNG_HPP
#define IOTYPER_RNG_HPP

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace iotyper {

// std::mt19937_64's output sequence is fixed by the standard, the
// <random> distributions are not. Everything that must replay bit-for-bit
// across toolchains goes through these helpers instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace iotyper

#endif  // IOTYPER_RNG_HPP
