#include "beamsel/rng.hpp"

#include <cmath>
#include <numbers>

namespace beamsel {

std::uint64_t mix64(std::uint64_t x) noexcept {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) noexcept : key_(mix64(seed ^ 0x5DEECE66DULL)) {}

Rng Rng::split(std::uint64_t stream) const noexcept {
  return Rng(mix64(key_ ^ mix64(stream + 0x632BE59BD9B4E019ULL)), 0);
}

std::uint64_t Rng::next_u64() noexcept {
  return mix64(key_ + mix64(counter_++));
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  double u1 = uniform();
  double u2 = uniform();
  // 1 - u1 lies in (0, 1] so the log is finite.
  double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
  return radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) noexcept {
  // Lemire's rejection keeps the draw unbiased.
  std::uint64_t bound = static_cast<std::uint64_t>(n);
  std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

}  // namespace beamsel
