// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/video_io/dataset.hpp"

#include <cmath>
#include <cstdio>

#include "pllab/errors.hpp"

namespace pllab {

namespace {

std::string key(std::size_t i, const char* field) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "set.%05zu.%s", i, field);
  return buf;
}

int as_index(double v, const std::string& where) {
  if (!(v >= 0.0 && v <= 3.0) || v != std::floor(v)) {
    throw FormatError("attribute out of range in '" + where + "'", 0);
  }
  return static_cast<int>(v);
}

}  // namespace

TensorMap encode_samples(const std::vector<SynthSample>& samples) {
  TensorMap out;
  out.emplace("set.count", Tensor({1}, {static_cast<double>(samples.size())}));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::vector<double> attrs{static_cast<double>(s.color), static_cast<double>(s.direction)};
    for (int v : s.color_order) attrs.push_back(v);
    for (int v : s.direction_order) attrs.push_back(v);
    out.emplace(key(i, "frames"), s.video.frames);
    out.emplace(key(i, "attrs"), Tensor({10}, std::move(attrs)));
  }
  return out;
}

std::vector<SynthSample> decode_samples(const TensorMap& entries) {
  const Tensor& count_t = require_entry(entries, "set.count");
  const double count = count_t[0];
  if (!(count >= 0.0) || count != std::floor(count)) throw FormatError("bad set.count", 0);
  std::vector<SynthSample> out;
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    const std::string attrs_key = key(i, "attrs");
    const Tensor& attrs = require_entry(entries, attrs_key);
    if (attrs.size() != 10) throw FormatError("'" + attrs_key + "' must hold 10 values", 0);
    const Tensor& frames = require_entry(entries, key(i, "frames"));
    if (frames.rank() != 4 || frames.dim(1) != 3) {
      throw FormatError("'" + key(i, "frames") + "' must be [T x 3 x H x W]", 0);
    }
    SynthSample s;
    s.video = Video{frames};
    s.color = as_index(attrs[0], attrs_key);
    s.direction = as_index(attrs[1], attrs_key);
    for (std::size_t k = 0; k < 4; ++k) {
      s.color_order[k] = as_index(attrs[2 + k], attrs_key);
      s.direction_order[k] = as_index(attrs[6 + k], attrs_key);
    }
    s.caption = caption_for(s.color, s.direction);
    s.questions.push_back(make_question(QuestionKind::spatial, s.color, s.color_order));
    s.questions.push_back(make_question(QuestionKind::temporal, s.direction, s.direction_order));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace pllab
