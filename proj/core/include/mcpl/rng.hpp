#pragma once

#include <cstdint>
#include <vector>

namespace mcpl {

/// Deterministic, portable pseudo-random generator (splitmix64 core).
///
/// All randomness in the library flows through this type so that results are
/// reproducible bit-for-bit from a seed, independent of the standard library
/// implementation. Distribution helpers use rejection sampling and are
/// therefore exact (no modulo bias).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_double();

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_below(std::uint64_t n);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// Finalizer of splitmix64; a bijection on 64-bit integers.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based per-repetition seed derivation: injective in `index` for a
/// fixed master seed, so repetitions can run in any order or in parallel.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Seed for an auxiliary named random stream (e.g. one permutation test),
/// stable under changes to unrelated parts of a run.
std::uint64_t derive_stream_seed(std::uint64_t master, const char* tag);

}  // namespace mcpl
