// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "pllab/numerics/tensor.hpp"

namespace pllab {

/// Mean over masked rows of -log softmax(logits)[target].
///
/// `logits` is [len x vocab]; `targets` and `mask` have one entry per row.
/// When `dlogits` is given it receives d(loss)/d(logits). Throws
/// ArgumentError if the mask selects no row.
double cross_entropy(const Tensor& logits, std::span<const int> targets,
                     const std::vector<bool>& mask, Tensor* dlogits = nullptr);

}  // namespace pllab
