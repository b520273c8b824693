#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace flowpat {

// splitmix64 finalizer (Vigna). Used for seed derivation and stream splitting.
std::uint64_t mix64(std::uint64_t x);

// Folds a list of words into a master seed so that every (pattern,
// inclination, index) combination gets an independent, order-sensitive
// stream. Serial and parallel generation therefore agree bit for bit.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> words);

// xoshiro256** (Blackman & Vigna, public domain), seeded through splitmix64.
// Chosen over std::mt19937 because the full generator *and* the derived
// distributions below are pinned here, so corpora and training runs are
// reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // [0, 1) with 53 random mantissa bits.
  double uniform();

  // [lo, hi)
  double uniform(double lo, double hi);

  // Unbiased-enough multiply-high mapping onto [0, n); fixed algorithm, so
  // shuffles reproduce everywhere. n must be > 0.
  std::uint64_t uniform_below(std::uint64_t n);

  // Box-Muller; the second variate of each pair is cached.
  double normal(double mean = 0.0, double stddev = 1.0);

  // New generator with a stream derived from this one's seed material.
  Rng derive(std::initializer_list<std::uint64_t> words) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace flowpat
