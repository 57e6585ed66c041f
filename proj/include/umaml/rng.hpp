#pragma once

#include <cstdint>
#include <limits>

namespace umaml {

// Purposes that get their own random stream within a run.
enum class Stream : std::uint64_t {
  kInit = 1,
  kTrainTasks,
  kTrainData,
  kTrainPermutation,
  kEvalTasks,
  kEvalData,
  kEvalPermutation,
};

// Counter-based generator: the n-th output is the SplitMix64 finalizer applied
// to key + n * golden, where key is derived from (seed, stream). Draws in one
// stream never shift another stream.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ull))) {}
  CounterRng(std::uint64_t seed, Stream stream)
      : CounterRng(seed, static_cast<std::uint64_t>(stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace umaml
