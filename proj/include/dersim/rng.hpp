#pragma once

#include <cstdint>

namespace dersim {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based uniform generator. The value at (row, column) depends only on
/// the key, so any slice of a Monte Carlo run can be regenerated independently
/// and in any order.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept
      : key_(mix64(seed ^ 0xD1B54A32D192ED03ull)) {}

  /// Independent stream derived from this one.
  constexpr CounterRng substream(std::uint64_t id) const noexcept {
    CounterRng r(0);
    r.key_ = mix64(key_ ^ mix64(id + 0x632BE59BD9B4E019ull));
    return r;
  }

  constexpr std::uint64_t bits(std::uint64_t row, std::uint64_t column = 0) const noexcept {
    std::uint64_t z = mix64(key_ + 0x9E3779B97F4A7C15ull * (row + 1));
    return mix64(z ^ (0xBF58476D1CE4E5B9ull * (column + 1)));
  }

  /// Uniform in [0, 1).
  constexpr double uniform(std::uint64_t row, std::uint64_t column = 0) const noexcept {
    return static_cast<double>(bits(row, column) >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

}  // namespace dersim
