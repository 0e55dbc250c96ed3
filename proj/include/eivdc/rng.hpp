#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace eivdc {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit key selects an independent family of streams and the 64-bit
/// stream id selects one stream inside it. Output i of stream s is a pure
/// function of (key, s, i), so replications running on different workers
/// draw identical numbers no matter how work is scheduled.
///
/// Satisfies UniformRandomBitGenerator, so it plugs into <random>
/// distributions and std::shuffle.
class Rng {
 public:
  using result_type = std::uint64_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Rng(std::uint64_t key, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double in the open interval (0, 1).
  double uniform() noexcept;

  void discard(std::uint64_t count) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// One application of the ten-round bijection.
  static Counter block(Counter counter, Key key) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  unsigned used_ = 2;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t value) noexcept;

/// 64-bit FNV-1a of a purpose string.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Sub-seed for one consumer of randomness:
/// mix64(seed XOR fnv1a64(purpose)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) noexcept;

}  // namespace eivdc
