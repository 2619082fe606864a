// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "pllab/errors.hpp"

namespace pllab {

namespace {

double eval_finite(const ScalarFn& f, const Tensor& p, std::size_t coord) {
  const double v = f(p);
  if (!std::isfinite(v)) {
    throw NumericError("grad_check: non-finite function value while perturbing coordinate " +
                       std::to_string(coord));
  }
  return v;
}

}  // namespace

GradCheckResult grad_check_detailed(const ScalarFn& f, const Tensor& params, const Tensor& analytic,
                                    double h, std::span<const std::size_t> coords) {
  if (!(h > 0.0)) throw ArgumentError("grad_check: step h must be > 0");
  if (params.shape() != analytic.shape()) {
    throw DimensionError("grad_check: params " + shape_str(params.shape()) + " vs gradient " +
                         shape_str(analytic.shape()));
  }
  GradCheckResult res;
  Tensor p = params;
  auto check_one = [&](std::size_t i) {
    if (i >= p.size()) throw ArgumentError("grad_check: coordinate out of range");
    const double orig = p[i];
    p[i] = orig + h;
    const double up = eval_finite(f, p, i);
    p[i] = orig - h;
    const double down = eval_finite(f, p, i);
    p[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double err = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
    if (err >= res.max_rel_error) {
      res = {err, i, a, numeric};
    }
  };
  if (coords.empty()) {
    for (std::size_t i = 0; i < p.size(); ++i) check_one(i);
  } else {
    for (auto i : coords) check_one(i);
  }
  return res;
}

double grad_check(const ScalarFn& f, const Tensor& params, const Tensor& analytic, double h) {
  return grad_check_detailed(f, params, analytic, h).max_rel_error;
}

}  // namespace pllab
