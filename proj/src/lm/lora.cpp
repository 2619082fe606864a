// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/lm/lora.hpp"

#include <algorithm>
#include <cmath>

#include "pllab/errors.hpp"
#include "pllab/numerics/ops.hpp"

namespace pllab {

void LoraLinear::validate() const {
  if (w0.rank() != 2) throw DimensionError("LoRA base weight must be rank 2, got " + shape_str(w0.shape()));
  if (!has_adapter()) return;
  if (rank < 1 || rank > std::min(out_features(), in_features())) {
    throw ArgumentError("LoRA rank " + std::to_string(rank) + " outside [1, min(out, in)] for " +
                        shape_str(w0.shape()));
  }
  if (a.shape() != Shape{rank, in_features()} || b.shape() != Shape{out_features(), rank}) {
    throw DimensionError("LoRA factors " + shape_str(a.shape()) + " / " + shape_str(b.shape()) +
                         " do not match base " + shape_str(w0.shape()) + " at rank " + std::to_string(rank));
  }
  if (!(alpha >= 0.0)) throw ArgumentError("LoRA alpha must be >= 0");
}

LoraLinear make_lora(Tensor w0, std::size_t rank, double alpha, Rng& rng) {
  LoraLinear l;
  const std::size_t in = w0.dim(1), out = w0.dim(0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  l.w0 = std::move(w0);
  l.a = rand_uniform({rank, in}, rng, -bound, bound);
  l.b = Tensor({out, rank});
  l.rank = rank;
  l.alpha = alpha;
  l.validate();
  return l;
}

Tensor lora_forward(const LoraLinear& layer, const Tensor& x, LoraCache* cache) {
  if (x.cols() != layer.in_features()) {
    throw DimensionError("lora_forward: input " + shape_str(x.shape()) + " vs weight " +
                         shape_str(layer.w0.shape()));
  }
  Tensor y = num::matmul_nt(x, layer.w0);
  if (layer.has_adapter()) {
    Tensor u = num::matmul_nt(x, layer.a);
    // alpha == 0 leaves exactly the base output.
    if (layer.alpha != 0.0) num::add_into(y, num::matmul_nt(u, layer.b), layer.scale());
    if (cache) cache->u = std::move(u);
  }
  if (cache) cache->x = x;
  return y;
}

Tensor lora_backward(const LoraLinear& layer, const LoraCache& cache, const Tensor& dy,
                     LoraLinear& grads, bool base_grad) {
  Tensor dx = num::matmul(dy, layer.w0);
  if (base_grad) num::add_into(grads.w0, num::matmul_tn(dy, cache.x));
  if (layer.has_adapter() && layer.alpha != 0.0) {
    const double s = layer.scale();
    num::add_into(grads.b, num::matmul_tn(dy, cache.u), s);
    Tensor du = num::scale(num::matmul(dy, layer.b), s);
    num::add_into(grads.a, num::matmul_tn(du, cache.x));
    num::add_into(dx, num::matmul(du, layer.a));
  }
  return dx.reshaped(cache.x.shape());
}

}  // namespace pllab
