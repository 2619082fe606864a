// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/diagnostics/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pllab/errors.hpp"

namespace pllab {

Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (bins == 0) throw ArgumentError("histogram needs at least one bin");
  if (!(hi >= lo)) throw ArgumentError("histogram range is empty");
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges[bins] = hi;
  for (double v : values) {
    std::size_t b = 0;
    if (width > 0.0 && v > lo) {
      b = static_cast<std::size_t>((v - lo) / width);
      b = std::min(b, bins - 1);
    }
    ++h.counts[b];
  }
  return h;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("median of an empty set");
  const std::size_t n = values.size(), mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

NormStats token_norms(const Tensor& tokens, std::size_t bins, double k) {
  if (tokens.empty() || tokens.rows() == 0) throw ArgumentError("token_norms: no tokens");
  NormStats s;
  s.dominant_k = k;
  s.norms.resize(tokens.rows());
  for (std::size_t r = 0; r < tokens.rows(); ++r) {
    double acc = 0.0;
    for (double v : tokens.row(r)) acc += v * v;
    s.norms[r] = std::sqrt(acc);
  }
  const double mx = *std::max_element(s.norms.begin(), s.norms.end());
  s.histogram = make_histogram(s.norms, 0.0, mx > 0.0 ? mx : 1.0, bins);
  s.median = median(s.norms);
  if (s.median > 0.0) {
    s.max_over_median = mx / s.median;
  } else {
    s.max_over_median = mx > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  const double threshold = k * s.median;
  for (std::size_t i = 0; i < s.norms.size(); ++i) {
    if (s.norms[i] > threshold) s.dominant_indices.push_back(i);
  }
  s.dominant_count = s.dominant_indices.size();
  return s;
}

NormStats token_norms(const FeatureGrid& grid, std::size_t bins, double k) {
  return token_norms(grid.tensor(), bins, k);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

SimilarityStats neighbor_similarity(const FeatureGrid& grid) {
  const std::size_t T = grid.frames(), W = grid.width(), H = grid.height(), D = grid.channels();
  const Tensor& x = grid.tensor();
  auto token = [&](std::size_t t, std::size_t i, std::size_t j) {
    return x.values().subspan(((t * W + i) * H + j) * D, D);
  };
  SimilarityStats s;
  s.spatial.reserve(T * (W * (H - 1) + (W - 1) * H));
  s.temporal.reserve((T - 1) * W * H);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < W; ++i) {
      for (std::size_t j = 0; j < H; ++j) {
        if (j + 1 < H) s.spatial.push_back(cosine_similarity(token(t, i, j), token(t, i, j + 1)));
        if (i + 1 < W) s.spatial.push_back(cosine_similarity(token(t, i, j), token(t, i + 1, j)));
        if (t + 1 < T) s.temporal.push_back(cosine_similarity(token(t, i, j), token(t + 1, i, j)));
      }
    }
  }
  s.mean_spatial = mean_of(s.spatial);
  s.mean_temporal = mean_of(s.temporal);
  return s;
}

LengthStats length_stats(std::vector<std::size_t> lengths, std::size_t bins) {
  if (lengths.empty()) throw ArgumentError("length statistics need at least one generation");
  LengthStats s;
  std::vector<double> as_double(lengths.begin(), lengths.end());
  const double mx = *std::max_element(as_double.begin(), as_double.end());
  s.histogram = make_histogram(as_double, 0.0, mx > 0.0 ? mx : 1.0, bins);
  s.mean = std::accumulate(as_double.begin(), as_double.end(), 0.0) / static_cast<double>(lengths.size());
  s.median = median(as_double);
  s.lengths = std::move(lengths);
  return s;
}

LengthStats text_length_stats(const std::vector<TokenSeq>& generations, std::size_t bins) {
  std::vector<std::size_t> lengths;
  lengths.reserve(generations.size());
  for (const auto& g : generations) {
    lengths.push_back(static_cast<std::size_t>(std::find(g.begin(), g.end(), kEos) - g.begin()));
  }
  return length_stats(std::move(lengths), bins);
}

}  // namespace pllab
