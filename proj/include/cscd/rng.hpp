#pragma once

#include <cstdint>
#include <limits>

namespace cscd {

// Substream splitting scheme:
//   key(seed)             = mix(seed)
//   key(seed, a)          = mix(key(seed) + (a + 1) * golden)
//   key(seed, a, b)       = mix(key(seed, a) + (b + 1) * golden)
// and the n-th output of a generator with key K is mix(K ^ mix(n * golden)).
// Simulations use a = replication, b = stream; the change-point draw of a
// replication uses b = kChangePointStream.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kChangePointStream = std::numeric_limits<std::uint64_t>::max() - 1;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t substream_key(std::uint64_t seed) { return mix64(seed); }

constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t a) {
  return mix64(substream_key(seed) + (a + 1) * kGolden);
}

constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(substream_key(seed, a) + (b + 1) * kGolden);
}

/// Counter-based generator: 16 bytes of state, O(1) jump to any position.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() { return mix64(key_ ^ mix64(++counter_ * kGolden)); }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Generator positioned for the draws of time index t within a stream substream.
constexpr CounterRng at_time(std::uint64_t key, std::int64_t t) {
  return CounterRng(key, static_cast<std::uint64_t>(t) << 24);
}

}  // namespace cscd
