// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <array>
#include <cstdint>

namespace actvae {

/// Counter-based random number generator.
///
/// The bit stream is Philox4x32-10 (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3") keyed by the 64-bit seed. Each 128-bit counter block
/// is (counter_lo, counter_hi, stream_lo, stream_hi), so a generator is fully
/// described by (seed, stream, counter) and every value it produces is a pure
/// function of that triple. Uniform doubles take the top 53 bits of a 64-bit
/// draw; standard normals use the Box-Muller transform on two uniforms with
/// the cosine branch only (one normal per pair, no cached spare).
class Rng {
 public:
  struct State {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;
    bool operator==(const State&) const = default;
  };

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);
  explicit Rng(const State& state);

  /// Sub-generator with the same seed and a stream id derived from this
  /// generator's stream and `id`. Forking does not advance the parent.
  Rng fork(std::uint64_t id) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  double normal();
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);

  State state() const;

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;  // number of 32-bit words consumed
  std::array<std::uint32_t, 4> block_{};
};

/// Raw Philox4x32-10 block function; exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

}  // namespace actvae
