#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pointsup {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Deterministic random stream.
///
/// Distributions are implemented here instead of taken from <random> so
/// that a (seed, key) pair yields the same numbers with every standard
/// library: simulated annotation files are reproducible byte for byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Stream keyed by (seed, key). Streams with different keys are
  /// independent, so adding an instance never reshuffles another one.
  static Rng stream(std::uint64_t seed, std::uint64_t key) noexcept;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  /// Standard normal (Box-Muller, one draw per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

// Well-known stream keys for non-instance consumers of a seed.
inline constexpr std::uint64_t kNoiseStreamKey = 0x6e6f697365000001ULL;
inline constexpr std::uint64_t kAugmentStreamKey = 0x6175676d00000002ULL;
inline constexpr std::uint64_t kInitStreamKey = 0x696e697400000003ULL;
inline constexpr std::uint64_t kFourierStreamKey = 0x666f757200000004ULL;
inline constexpr std::uint64_t kSuiteStreamKey = 0x7375697465000005ULL;

}  // namespace pointsup
