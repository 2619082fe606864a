// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pllab/vision/feature_grid.hpp"

namespace pllab {

/// Target (T', w', h') for adaptive structure pooling.
struct PoolSpec {
  std::size_t t_out = 1;
  std::size_t w_out = 1;
  std::size_t h_out = 1;

  /// Throws DimensionError unless 1 <= t_out <= T, 1 <= w_out <= w, 1 <= h_out <= h.
  void validate(std::size_t T, std::size_t w, std::size_t h) const;
  std::size_t tokens() const { return t_out * w_out * h_out; }
  std::string str() const;
  friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

/// Half-open input interval feeding one output position.
struct Bin {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const Bin&, const Bin&) = default;
};

/// Bin i = [floor(i * in / out), ceil((i + 1) * in / out)).
///
/// Bins cover [0, in_len) without gaps; neighbouring bins overlap when
/// out_len does not divide in_len. Requires 1 <= out_len <= in_len.
std::vector<Bin> pool_bins(std::size_t in_len, std::size_t out_len);

/// Mean over the Cartesian product of the per-axis bins; the embedding axis is untouched.
FeatureGrid adaptive_pool(const FeatureGrid& grid, const PoolSpec& spec);
/// Gradient of `adaptive_pool` with respect to its input of shape `in_shape`.
Tensor adaptive_pool_backward(const Tensor& dout, const Shape& in_shape, const PoolSpec& spec);

/// t_out / t_in. Requires 1 <= t_out <= t_in.
double downsample_rate(std::size_t t_in, std::size_t t_out);

/// Concatenated frame tokens [(T*w*h) x d], t-major then raster order. Values unchanged.
Tensor n_frame_flatten(const FeatureGrid& grid);

/// Temporal mean per spatial site (w*h tokens, raster order) followed by the
/// spatial mean per frame (T tokens): [(w*h + T) x d].
Tensor vcg_pool(const FeatureGrid& grid);
Tensor vcg_pool_backward(const Tensor& dout, const Shape& in_shape);

/// How projected frame features become the LLM's visual tokens.
enum class PoolMode { adaptive, n_frame, vcg };

std::string to_string(PoolMode mode);
PoolMode pool_mode_from_string(const std::string& s);

/// Visual token sequence [n x d] for the chosen mode (`spec` only used by adaptive).
Tensor visual_tokens(const FeatureGrid& grid, PoolMode mode, const PoolSpec& spec);
Tensor visual_tokens_backward(const Tensor& dtokens, const Shape& grid_shape, PoolMode mode,
                              const PoolSpec& spec);
std::size_t visual_token_count(std::size_t T, std::size_t w, std::size_t h, PoolMode mode,
                               const PoolSpec& spec);

}  // namespace pllab
