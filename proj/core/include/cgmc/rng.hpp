#pragma once

#include <cstdint>
#include <limits>

namespace cgmc {

/// Counter-based pseudo random generator (SplitMix64 with a per-stream odd
/// increment). A (seed, stream) pair selects an independent deterministic
/// sequence, so parallel chains never share mutable state.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) {
    counter_ = mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull));
    gamma_ = mix((stream << 1) ^ seed) | 1ull;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

  result_type operator()() {
    counter_ += gamma_;
    return mix(counter_);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n >= 1.
  std::uint64_t uniform_int(std::uint64_t n) {
    // Lemire's multiply-shift with rejection for exact uniformity.
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform spin value in {-1, +1}.
  int spin() { return ((*this)() >> 63) ? +1 : -1; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t counter_ = 0;
  std::uint64_t gamma_ = 1;
};

}  // namespace cgmc
