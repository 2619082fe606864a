// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/video_io/sampling.hpp"

#include "pllab/errors.hpp"

namespace pllab {

std::vector<std::size_t> uniform_sample_indices(std::size_t total_frames, std::size_t n) {
  if (total_frames == 0 || n == 0) {
    throw ArgumentError("uniform_sample_indices: total_frames and n must be >= 1");
  }
  std::vector<std::size_t> idx(n);
  // floor((2i + 1) * total / 2n) in integers, exact for all sizes we use.
  for (std::size_t i = 0; i < n; ++i) idx[i] = ((2 * i + 1) * total_frames) / (2 * n);
  return idx;
}

}  // namespace pllab
