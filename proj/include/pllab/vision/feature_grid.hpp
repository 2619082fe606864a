// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "pllab/numerics/tensor.hpp"

namespace pllab {

/// Per-frame visual token embeddings, shape (T, w, h, d).
///
/// Axis w indexes patch rows and h patch columns, so flattening (w, h) in
/// row-major order reproduces the raster order of `patchify`.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  explicit FeatureGrid(Tensor data);

  const Tensor& tensor() const noexcept { return data_; }
  Tensor& tensor() noexcept { return data_; }

  std::size_t frames() const { return data_.dim(0); }
  std::size_t width() const { return data_.dim(1); }
  std::size_t height() const { return data_.dim(2); }
  std::size_t channels() const { return data_.dim(3); }
  std::size_t tokens() const { return frames() * width() * height(); }

  double at(std::size_t t, std::size_t i, std::size_t j, std::size_t c) const {
    return data_[((t * width() + i) * height() + j) * channels() + c];
  }

 private:
  Tensor data_;
};

}  // namespace pllab
