// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/video_io/synth.hpp"

#include <algorithm>
#include <cstring>

#include "pllab/errors.hpp"

namespace pllab {

namespace {

constexpr std::array<std::array<double, 3>, 4> kColorRgb{{
    {1.0, 0.0, 0.0},
    {0.0, 1.0, 0.0},
    {0.0, 0.0, 1.0},
    {1.0, 1.0, 0.0},
}};

std::array<int, 4> shuffled_order(Rng& rng) {
  std::array<int, 4> order{0, 1, 2, 3};
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  return order;
}

// Length of [a, a+1) ∩ [lo, hi).
double overlap(double a, double lo, double hi) {
  return std::max(0.0, std::min(a + 1.0, hi) - std::max(a, lo));
}

}  // namespace

std::string Question::prompt_text() const {
  std::string s = text;
  s += ' ';
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (i) s += '/';
    s += choices[i];
  }
  return s;
}

Tensor Video::select(std::span<const std::size_t> indices) const {
  const std::size_t per = frames.size() / frame_count();
  Shape shape = frames.shape();
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= frame_count()) throw ArgumentError("Video::select: frame index out of range");
    std::memcpy(out.data() + i * per, frames.data() + indices[i] * per, per * sizeof(double));
  }
  return out;
}

std::string caption_for(int color, int direction) {
  return "a " + std::string(kColorNames.at(static_cast<std::size_t>(color))) + " square moving " +
         std::string(kDirectionNames.at(static_cast<std::size_t>(direction)));
}

Question make_question(QuestionKind kind, int truth, const std::array<int, 4>& order) {
  Question q;
  q.kind = kind;
  const auto& names = kind == QuestionKind::spatial ? kColorNames : kDirectionNames;
  q.text = kind == QuestionKind::spatial ? "What color is it?" : "Where does it move?";
  for (std::size_t i = 0; i < 4; ++i) {
    q.choices[i] = std::string(names.at(static_cast<std::size_t>(order[i])));
    if (order[i] == truth) q.correct = static_cast<int>(i);
  }
  return q;
}

SynthSample gen_synth_sample(Rng& rng, std::size_t grid_px) {
  return gen_synth_sample(rng, SynthOptions{grid_px, 16, 0.03});
}

SynthSample gen_synth_sample(Rng& rng, const SynthOptions& opts) {
  if (opts.grid_px < 8) throw ArgumentError("gen_synth_sample: grid_px must be >= 8");
  if (opts.frames == 0) throw ArgumentError("gen_synth_sample: frames must be >= 1");
  if (opts.noise < 0.0 || opts.noise > 0.5) throw ArgumentError("gen_synth_sample: noise out of range");

  SynthSample s;
  s.color = static_cast<int>(rng.below(4));
  s.direction = static_cast<int>(rng.below(4));
  const std::size_t P = opts.grid_px;
  const double side = static_cast<double>(P / 4);
  const double travel = static_cast<double>(P) - side;
  const double across = rng.uniform(0.0, travel);
  s.color_order = shuffled_order(rng);
  s.direction_order = shuffled_order(rng);

  const std::size_t T = opts.frames;
  Tensor frames({T, 3, P, P});
  const auto& rgb = kColorRgb[static_cast<std::size_t>(s.color)];
  for (std::size_t t = 0; t < T; ++t) {
    const double along =
        T == 1 ? travel / 2.0 : travel * static_cast<double>(t) / static_cast<double>(T - 1);
    double x = across, y = across;
    switch (s.direction) {
      case 0: x = travel - along; break;  // left
      case 1: x = along; break;           // right
      case 2: y = travel - along; break;  // up (rows grow downwards)
      default: y = along; break;          // down
    }
    for (std::size_t r = 0; r < P; ++r) {
      const double cy = overlap(static_cast<double>(r), y, y + side);
      for (std::size_t c = 0; c < P; ++c) {
        const double cov = cy * overlap(static_cast<double>(c), x, x + side);
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const double bg = opts.noise * rng.uniform();
          frames[((t * 3 + ch) * P + r) * P + c] = bg * (1.0 - cov) + rgb[ch] * cov;
        }
      }
    }
  }
  s.video = Video{std::move(frames)};
  s.caption = caption_for(s.color, s.direction);
  s.questions.push_back(make_question(QuestionKind::spatial, s.color, s.color_order));
  s.questions.push_back(make_question(QuestionKind::temporal, s.direction, s.direction_order));
  return s;
}

std::vector<SynthSample> gen_synth_set(std::uint64_t seed, std::size_t count, const SynthOptions& opts) {
  Rng rng(seed);
  std::vector<SynthSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(gen_synth_sample(rng, opts));
  return out;
}

}  // namespace pllab
