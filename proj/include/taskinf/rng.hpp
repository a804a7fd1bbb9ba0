// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Portable seeded randomness. Everything here is specified down to the bit so
// tasksets and training runs reproduce across platforms and standard
// libraries: xoshiro256** seeded through splitmix64, Box-Muller normals, and
// rejection-sampled bounded integers.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

namespace taskinf {

/// One splitmix64 step; also used to derive independent sub-seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes a parent seed with a stream index into a new seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (the second variate is cached).
  double normal();
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace taskinf
