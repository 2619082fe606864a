// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/trainer/loss.hpp"

#include <algorithm>
#include <cmath>

#include "pllab/errors.hpp"

namespace pllab {

double cross_entropy(const Tensor& logits, std::span<const int> targets,
                     const std::vector<bool>& mask, Tensor* dlogits) {
  const std::size_t n = logits.rows(), V = logits.cols();
  if (targets.size() != n || mask.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(n) + " logit rows vs " +
                         std::to_string(targets.size()) + " targets / " + std::to_string(mask.size()) +
                         " mask entries");
  }
  const auto count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  if (count == 0) throw ArgumentError("cross_entropy: mask selects no position");
  if (dlogits) *dlogits = Tensor(logits.shape());

  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!mask[r]) continue;
    const int tgt = targets[r];
    if (tgt < 0 || static_cast<std::size_t>(tgt) >= V) throw ArgumentError("cross_entropy: target out of range");
    auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    total += log_z - row[static_cast<std::size_t>(tgt)];
    if (dlogits) {
      auto g = dlogits->row(r);
      for (std::size_t c = 0; c < V; ++c) g[c] = std::exp(row[c] - log_z) / static_cast<double>(count);
      g[static_cast<std::size_t>(tgt)] -= 1.0 / static_cast<double>(count);
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace pllab
