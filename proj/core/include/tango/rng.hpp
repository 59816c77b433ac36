#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace tango {

/// Seeded generator with platform-independent draws.
///
/// std::mt19937_64's raw sequence is fixed by the standard, but the standard
/// distributions are not, so uniform reals and bounded integers are derived
/// from raw 64-bit outputs here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = next();
    while (r >= limit) r = next();
    return r % n;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  /// Independent child stream, e.g. one per dataset split or per seed.
  Rng fork(std::uint64_t stream) { return Rng(next() ^ (0x9E3779B97F4A7C15ULL * (stream + 1))); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tango
