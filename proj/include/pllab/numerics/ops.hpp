// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "pllab/numerics/tensor.hpp"

// Elementary dense operations and their hand-derived backward passes.
//
// Matrix-style operations view a tensor of shape [..., k] as a matrix with
// `rows()` rows and k columns; results keep the leading axes of the left
// operand. Weights follow the [out x in] convention, so `linear` computes
// x * w^T + bias.
namespace pllab::num {

Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T; a is [..., k], b is [n x k].
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// a^T * b; a is [r x m], b is [r x n] (both viewed as matrices).
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
/// acc += s * x, shapes must match exactly.
void add_into(Tensor& acc, const Tensor& x, double s = 1.0);
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// Column sums of the matrix view: [cols].
Tensor sum_rows(const Tensor& x);

/// Softmax over the last axis with max subtraction. NaN inputs propagate.
Tensor softmax(const Tensor& x);
Tensor softmax_backward(const Tensor& y, const Tensor& dy);

struct LayerNormCache {
  Tensor xhat;
  std::vector<double> rstd;
};

struct LayerNormGrads {
  Tensor dx, dgain, dbias;
};

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps,
                  LayerNormCache* cache = nullptr);
LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const Tensor& gain,
                                   const Tensor& dy);

// GELU, tanh approximation:
//   0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
inline constexpr double kGeluCoeff = 0.044715;
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;

Tensor gelu(const Tensor& x);
Tensor gelu_backward(const Tensor& x, const Tensor& dy);

struct LinearGrads {
  Tensor dx, dw, db;
};

/// x * w^T + bias; `bias` may be an empty tensor.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, bool with_bias);

}  // namespace pllab::num
