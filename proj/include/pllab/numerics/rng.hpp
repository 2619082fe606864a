// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

#include "pllab/numerics/tensor.hpp"

namespace pllab {

/// xoshiro256++ with state expanded from a 64-bit seed by splitmix64.
///
/// Only integer arithmetic touches the state, so a seed produces the same
/// stream on every platform. Floating-point draws are derived from the top
/// 53 bits of `next()`.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller, one draw per call).
  double normal();

  /// Independent generator for a named sub-stream; does not advance *this.
  Rng fork(std::uint64_t stream) const;

 private:
  std::array<std::uint64_t, 4> s_{};
};

Tensor randn(Shape shape, Rng& rng, double stddev);
Tensor rand_uniform(Shape shape, Rng& rng, double lo, double hi);

}  // namespace pllab
