// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "pllab/video_io/plck.hpp"
#include "pllab/video_io/synth.hpp"

namespace pllab {

// Sample sets stored in PLCK:
//   "set.count"          [1]             number of samples N
//   "set.NNNNN.frames"   [T x 3 x H x W] rendered video
//   "set.NNNNN.attrs"    [10]            color, direction, color choice order (4),
//                                        direction choice order (4)
// Captions and questions are rebuilt from the attributes.
TensorMap encode_samples(const std::vector<SynthSample>& samples);
std::vector<SynthSample> decode_samples(const TensorMap& entries);

}  // namespace pllab
