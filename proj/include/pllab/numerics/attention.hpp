// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "pllab/numerics/tensor.hpp"

namespace pllab::num {

/// Saved activations for the backward pass of `attention`.
struct AttentionCache {
  Tensor q, k, v;
  Tensor probs;  // [blocks * heads, block, block]
  std::size_t heads = 1;
  std::size_t block = 0;
  bool causal = false;
};

struct AttentionGrads {
  Tensor dq, dk, dv;
};

/// Multi-head scaled dot-product attention over [n x d] projections.
///
/// Rows are split into consecutive independent blocks of `block` rows; a row
/// only attends inside its own block. With `causal`, row i attends to rows
/// j <= i of its block. `d` must be divisible by `heads`, `n` by `block`.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::size_t block, bool causal, AttentionCache* cache = nullptr);

AttentionGrads attention_backward(const AttentionCache& cache, const Tensor& dout);

}  // namespace pllab::num
