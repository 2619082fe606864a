// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "pllab/numerics/rng.hpp"
#include "pllab/numerics/tensor.hpp"

namespace pllab {

/// Frozen base weight plus a low-rank adapter:  h = w0 x + (alpha / rank) b (a x).
///
/// w0 is [out x in], a is [rank x in], b is [out x rank]. The product b*a is
/// never formed on the forward or backward path. A layer whose adapter has
/// been folded away (see merge) keeps `a` and `b` empty and behaves as a
/// plain linear map.
struct LoraLinear {
  Tensor w0;
  Tensor a;
  Tensor b;
  std::size_t rank = 0;
  double alpha = 0.0;

  bool has_adapter() const { return !a.empty(); }
  double scale() const { return alpha / static_cast<double>(rank); }
  std::size_t in_features() const { return w0.dim(1); }
  std::size_t out_features() const { return w0.dim(0); }
  /// Throws DimensionError / ArgumentError on inconsistent factors.
  void validate() const;
};

/// Fresh adapter around `w0`: a ~ U(-1/sqrt(in), 1/sqrt(in)), b = 0.
LoraLinear make_lora(Tensor w0, std::size_t rank, double alpha, Rng& rng);

struct LoraCache {
  Tensor x;
  Tensor u;  // a x, [rows x rank]
};

Tensor lora_forward(const LoraLinear& layer, const Tensor& x, LoraCache* cache = nullptr);

/// Accumulates d/da and d/db into `grads` (and d/dw0 when `base_grad`); returns d/dx.
Tensor lora_backward(const LoraLinear& layer, const LoraCache& cache, const Tensor& dy,
                     LoraLinear& grads, bool base_grad = false);

}  // namespace pllab
