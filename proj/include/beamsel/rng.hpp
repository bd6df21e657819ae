#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace beamsel {

/// Counter-based generator: output k is a pure function of (key, k), so a
/// stream can be split into independent child streams without sharing state.
/// All stochastic operations in the library take one of these explicitly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  /// Child stream identified by `stream`; does not advance this generator.
  Rng split(std::uint64_t stream) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept;
  /// Uniform integer in [0, n). n must be > 0.
  std::size_t below(std::size_t n) noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter) noexcept : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace beamsel
