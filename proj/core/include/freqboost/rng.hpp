#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace freqboost {

/// SplitMix64 output function (finalizer only, no state).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/**
 * Seeded pseudo-random stream: xoshiro256** whose 256-bit state is filled
 * by four successive SplitMix64 outputs of the seed.
 *
 * The generator is fully specified here (no std:: engines or
 * distributions), so a seed yields the same sequence on every platform.
 * Per-trial streams come from stream_seed(master, index); see there.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) noexcept;

  /// Stream for trial `index` of an ensemble seeded with `master`.
  static RngStream for_trial(std::uint64_t master, std::uint64_t index) noexcept {
    return RngStream(stream_seed(master, index));
  }

  /// Splitting rule: mix64(master + 0x9E3779B97F4A7C15 * (index + 1)).
  static constexpr std::uint64_t stream_seed(std::uint64_t master,
                                             std::uint64_t index) noexcept {
    return mix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  result_type operator()() noexcept { return next_u64(); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace freqboost
