// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace pllab {

/// Centre-offset uniform frame sampling: index_i = floor((i + 0.5) * total / n).
///
/// The result is nondecreasing and lies in [0, total). When n > total some
/// indices repeat. Both arguments must be >= 1.
std::vector<std::size_t> uniform_sample_indices(std::size_t total_frames, std::size_t n);

}  // namespace pllab
