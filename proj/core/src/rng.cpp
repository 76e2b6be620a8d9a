#include "freqboost/rng.hpp"

namespace freqboost {

RngStream::RngStream(std::uint64_t seed) noexcept : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) {
    sm += 0x9E3779B97F4A7C15ULL;
    word = mix64(sm);
  }
  // xoshiro's all-zero state is a fixed point; SplitMix64 never yields four
  // zero words in a row, but keep the guard explicit.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

}  // namespace freqboost
