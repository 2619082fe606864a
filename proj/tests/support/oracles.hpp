// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

#include "pllab/numerics/rng.hpp"
#include "pllab/numerics/tensor.hpp"
#include "pllab/pooling/pooling.hpp"
#include "pllab/vision/feature_grid.hpp"

namespace pllab::test {

// Brute-force oracle: enumerate each output cell's bins directly from the
// floor/ceil definition with integer arithmetic and average.
inline Tensor oracle_pool(const Tensor& x, const PoolSpec& s) {
  const std::size_t T = x.dim(0), W = x.dim(1), H = x.dim(2), D = x.dim(3);
  auto lo = [](std::size_t i, std::size_t in, std::size_t out) { return (i * in) / out; };
  auto hi = [](std::size_t i, std::size_t in, std::size_t out) { return ((i + 1) * in + out - 1) / out; };
  Tensor y({s.t_out, s.w_out, s.h_out, D});
  for (std::size_t a = 0; a < s.t_out; ++a)
    for (std::size_t b = 0; b < s.w_out; ++b)
      for (std::size_t c = 0; c < s.h_out; ++c)
        for (std::size_t d = 0; d < D; ++d) {
          double sum = 0.0;
          std::size_t n = 0;
          for (std::size_t t = lo(a, T, s.t_out); t < hi(a, T, s.t_out); ++t)
            for (std::size_t i = lo(b, W, s.w_out); i < hi(b, W, s.w_out); ++i)
              for (std::size_t j = lo(c, H, s.h_out); j < hi(c, H, s.h_out); ++j) {
                sum += x[((t * W + i) * H + j) * D + d];
                ++n;
              }
          y[((a * s.w_out + b) * s.h_out + c) * D + d] = sum / static_cast<double>(n);
        }
  return y;
}

// Two-loop oracle for the VCG baseline.
inline Tensor oracle_vcg(const Tensor& x) {
  const std::size_t T = x.dim(0), W = x.dim(1), H = x.dim(2), D = x.dim(3);
  Tensor y({W * H + T, D});
  for (std::size_t s = 0; s < W * H; ++s)
    for (std::size_t d = 0; d < D; ++d) {
      double sum = 0.0;
      for (std::size_t t = 0; t < T; ++t) sum += x[(t * W * H + s) * D + d];
      y.at(s, d) = sum / static_cast<double>(T);
    }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) {
      double sum = 0.0;
      for (std::size_t s = 0; s < W * H; ++s) sum += x[(t * W * H + s) * D + d];
      y.at(W * H + t, d) = sum / static_cast<double>(W * H);
    }
  return y;
}

struct PairOracle {
  std::vector<double> spatial;
  std::vector<double> temporal;
  double sum_spatial = 0.0;
  double sum_temporal = 0.0;
};

// All-pairs enumeration: every ordered token pair (p < q) is classified by its
// coordinate distance; spatial neighbours differ by one step in i or j within a
// frame, temporal neighbours share (i, j) in consecutive frames.
inline PairOracle oracle_pairs(const FeatureGrid& g) {
  const std::size_t T = g.frames(), W = g.width(), H = g.height(), D = g.channels();
  auto cosine = [&](std::size_t t1, std::size_t i1, std::size_t j1, std::size_t t2, std::size_t i2, std::size_t j2) {
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (std::size_t c = 0; c < D; ++c) {
      const double a = g.at(t1, i1, j1, c), b = g.at(t2, i2, j2, c);
      dot += a * b;
      n1 += a * a;
      n2 += b * b;
    }
    if (n1 == 0.0 || n2 == 0.0) return 0.0;
    return dot / (std::sqrt(n1) * std::sqrt(n2));
  };
  PairOracle o;
  const std::size_t n = T * W * H;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const std::size_t t1 = p / (W * H), i1 = p / H % W, j1 = p % H;
      const std::size_t t2 = q / (W * H), i2 = q / H % W, j2 = q % H;
      const std::size_t dt = t2 - t1;
      const std::size_t di = i1 > i2 ? i1 - i2 : i2 - i1, dj = j1 > j2 ? j1 - j2 : j2 - j1;
      if (dt == 0 && di + dj == 1) {
        o.spatial.push_back(cosine(t1, i1, j1, t2, i2, j2));
        o.sum_spatial += o.spatial.back();
      } else if (dt == 1 && di == 0 && dj == 0) {
        o.temporal.push_back(cosine(t1, i1, j1, t2, i2, j2));
        o.sum_temporal += o.temporal.back();
      }
    }
  }
  return o;
}

// Tokens with norms spread over [0.8, 1.2] and random directions. The token at
// `outlier` (if in range) is scaled by factor / 0.8, so its norm is at least
// `factor` times the median.
inline FeatureGrid outlier_grid(std::size_t T, std::size_t W, std::size_t H, std::size_t D, Rng& rng,
                                std::size_t outlier, double factor) {
  const std::size_t n = T * W * H;
  Tensor x({T, W, H, D});
  for (std::size_t p = 0; p < n; ++p) {
    double norm2 = 0.0;
    for (std::size_t c = 0; c < D; ++c) {
      x[p * D + c] = rng.normal();
      norm2 += x[p * D + c] * x[p * D + c];
    }
    const double target = rng.uniform(0.8, 1.2);
    for (std::size_t c = 0; c < D; ++c) x[p * D + c] *= target / std::sqrt(norm2);
  }
  if (outlier < n) {
    for (std::size_t c = 0; c < D; ++c) x[outlier * D + c] *= factor / 0.8;
  }
  return FeatureGrid(std::move(x));
}

}  // namespace pllab::test
