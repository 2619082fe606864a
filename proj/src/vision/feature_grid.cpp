// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/vision/feature_grid.hpp"

#include "pllab/errors.hpp"

namespace pllab {

FeatureGrid::FeatureGrid(Tensor data) : data_(std::move(data)) {
  if (data_.rank() != 4) {
    throw DimensionError("FeatureGrid expects a rank-4 (T, w, h, d) tensor, got " +
                         shape_str(data_.shape()));
  }
}

}  // namespace pllab
