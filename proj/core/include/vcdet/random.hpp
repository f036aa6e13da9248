#pragma once

#include <cstdint>
#include <vector>

namespace vcdet {

/// SplitMix64. Small, seedable and bit-reproducible across platforms, which
/// std::mt19937 + std distributions are not.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// Deterministic sample of `count` indices from [0, n) via a partial
/// Fisher-Yates shuffle, returned in ascending order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed);

/// 64-bit FNV-1a, used for content digests and keyed hashing.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace vcdet
