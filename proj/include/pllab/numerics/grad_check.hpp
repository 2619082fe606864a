// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "pllab/numerics/tensor.hpp"

namespace pllab {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

using ScalarFn = std::function<double(const Tensor&)>;

/// Central-difference gradient check.
///
/// For each checked coordinate i the error is
///   |analytic_i - numeric_i| / max(1e-12, |analytic_i| + |numeric_i|)
/// with numeric_i = (f(p + h e_i) - f(p - h e_i)) / 2h. Returns the maximum.
/// `coords` restricts the check to a subset of coordinates (empty = all).
/// Throws NumericError if f returns a non-finite value.
GradCheckResult grad_check_detailed(const ScalarFn& f, const Tensor& params, const Tensor& analytic,
                                    double h, std::span<const std::size_t> coords = {});

double grad_check(const ScalarFn& f, const Tensor& params, const Tensor& analytic, double h);

}  // namespace pllab
