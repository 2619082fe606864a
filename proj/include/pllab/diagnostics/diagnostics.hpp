// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pllab/lm/tokenizer.hpp"
#include "pllab/numerics/tensor.hpp"
#include "pllab/vision/feature_grid.hpp"

namespace pllab {

/// Equal-width bins over [lo, hi]; a value equal to hi lands in the last bin.
struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

/// Throws ArgumentError if bins == 0 or hi < lo. Values outside [lo, hi] are clamped.
Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

/// Median; mean of the two middle values for even counts. Empty input throws.
double median(std::vector<double> values);

inline constexpr std::size_t kNormBins = 50;
inline constexpr double kDominantK = 5.0;

struct NormStats {
  std::vector<double> norms;
  Histogram histogram;  // over [0, max norm]
  double median = 0.0;
  double max_over_median = 1.0;  // 1 when every norm is 0; +inf when only the median is 0
  double dominant_k = kDominantK;
  std::size_t dominant_count = 0;  // norms strictly greater than k * median
  std::vector<std::size_t> dominant_indices;
};

/// Euclidean norm of every token (last axis = embedding). Empty input throws ArgumentError.
NormStats token_norms(const Tensor& tokens, std::size_t bins = kNormBins, double k = kDominantK);
NormStats token_norms(const FeatureGrid& grid, std::size_t bins = kNormBins, double k = kDominantK);

/// Cosine similarity; 0 when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct SimilarityStats {
  // Absent when the grid has a single spatial site / a single frame.
  std::optional<double> mean_spatial;
  std::optional<double> mean_temporal;
  std::vector<double> spatial;   // right then down neighbour, per site in (t, i, j) order
  std::vector<double> temporal;  // (t, i, j) against (t + 1, i, j)
};

/// 4-neighbourhood pairs within frames: T * (w * (h - 1) + (w - 1) * h);
/// pairs across consecutive frames: (T - 1) * w * h.
SimilarityStats neighbor_similarity(const FeatureGrid& grid);

struct LengthStats {
  std::vector<std::size_t> lengths;
  Histogram histogram;  // over [0, max length]
  double mean = 0.0;
  double median = 0.0;
};

inline constexpr std::size_t kLengthBins = 10;

/// Length = tokens before the first EOS. Empty list throws ArgumentError.
LengthStats text_length_stats(const std::vector<TokenSeq>& generations, std::size_t bins = kLengthBins);
LengthStats length_stats(std::vector<std::size_t> lengths, std::size_t bins = kLengthBins);

}  // namespace pllab
