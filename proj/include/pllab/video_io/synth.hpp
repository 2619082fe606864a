// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pllab/numerics/rng.hpp"
#include "pllab/numerics/tensor.hpp"

namespace pllab {

inline constexpr std::array<std::string_view, 4> kColorNames{"red", "green", "blue", "yellow"};
inline constexpr std::array<std::string_view, 4> kDirectionNames{"left", "right", "up", "down"};

enum class QuestionKind { spatial, temporal };

/// Four-way multiple choice question; `correct` indexes `choices`.
struct Question {
  QuestionKind kind = QuestionKind::spatial;
  std::string text;
  std::array<std::string, 4> choices;
  int correct = 0;

  const std::string& answer() const { return choices[static_cast<std::size_t>(correct)]; }
  /// Question followed by the slash-separated choices, e.g. "What color is it? red/blue/...".
  std::string prompt_text() const;
};

/// Frames [T x 3 x H x W] with values in [0, 1].
struct Video {
  Tensor frames;

  std::size_t frame_count() const { return frames.dim(0); }
  std::size_t height() const { return frames.dim(2); }
  std::size_t width() const { return frames.dim(3); }
  /// Gathers frames by index into a new [n x 3 x H x W] tensor.
  Tensor select(std::span<const std::size_t> indices) const;
};

struct SynthSample {
  Video video;
  std::string caption;
  std::vector<Question> questions;  // [spatial (color), temporal (direction)]
  int color = 0;
  int direction = 0;
  std::array<int, 4> color_order{};      // choice order of the color question
  std::array<int, 4> direction_order{};  // choice order of the direction question
};

struct SynthOptions {
  std::size_t grid_px = 16;
  std::size_t frames = 16;
  double noise = 0.03;  // background noise amplitude
};

/// A colored square translating in a cardinal direction across the clip.
///
/// The square (side grid_px/4) travels the full free extent of the frame at
/// constant speed and is rendered with exact area coverage, so its centroid
/// moves strictly monotonically along the motion axis.
SynthSample gen_synth_sample(Rng& rng, std::size_t grid_px);
SynthSample gen_synth_sample(Rng& rng, const SynthOptions& opts);

std::string caption_for(int color, int direction);
Question make_question(QuestionKind kind, int truth, const std::array<int, 4>& order);

std::vector<SynthSample> gen_synth_set(std::uint64_t seed, std::size_t count, const SynthOptions& opts);

}  // namespace pllab
