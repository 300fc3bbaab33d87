#pragma once

// Counter-based random streams. A stream is identified by (seed, key); the
// i-th draw is a pure function of (seed, key, i), so results do not depend on
// evaluation order or thread count.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace rtensor {

/// One round of the splitmix64 finalizer.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterStream {
public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t key) noexcept
      : base_(splitmix64(splitmix64(seed) ^ (key * 0xd1b54a32d192ed03ULL))) {}

  [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return splitmix64(base_ + counter * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform double in the open interval (0, 1).
  [[nodiscard]] double uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Pair of independent standard normals from draws (2i, 2i+1) via Box-Muller.
  [[nodiscard]] std::pair<double, double> normal_pair(std::uint64_t i) const noexcept {
    const double u1 = uniform(2 * i);
    const double u2 = uniform(2 * i + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  [[nodiscard]] double normal(std::uint64_t i) const noexcept { return normal_pair(i).first; }

private:
  std::uint64_t base_;
};

} // namespace rtensor
