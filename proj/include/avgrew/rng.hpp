#pragma once

#include <cstdint>

namespace avgrew {

/// Stateless mixing function of SplitMix64.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based stream: draw k of stream key is a pure function of (key, k),
/// so results do not depend on which thread generates which stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Derives a key from a seed and a list of stream coordinates.
  template <typename... Ts>
  static std::uint64_t key_of(std::uint64_t seed, Ts... coords) {
    std::uint64_t k = splitmix64(seed);
    ((k = splitmix64(k ^ splitmix64(static_cast<std::uint64_t>(coords) + 0x632BE59BD9B4E019ULL))), ...);
    return k;
  }

  std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace avgrew
