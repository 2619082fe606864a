// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pllab/numerics/attention.hpp"
#include "pllab/numerics/ops.hpp"
#include "pllab/numerics/rng.hpp"
#include "pllab/vision/feature_grid.hpp"

namespace pllab {

struct VisionConfig {
  std::size_t patch_px = 4;
  std::size_t d_vis = 32;
  std::size_t d_model = 64;
  std::size_t encoder_layers = 2;
  std::size_t heads = 2;

  /// Throws DimensionError unless frames of `frame_px` square pixels tile into patches
  /// and both widths split evenly across heads.
  void validate(std::size_t frame_px) const;
  std::size_t grid_side(std::size_t frame_px) const { return frame_px / patch_px; }
  std::size_t patch_dim() const { return 3 * patch_px * patch_px; }
};

inline constexpr double kLayerNormEps = 1e-5;

/// Splits a [C x H x W] frame into non-overlapping patches.
///
/// Rows of the result follow raster order of the patch grid; inside a patch
/// values are channel-major, then row-major over pixels.
Tensor patchify(const Tensor& frame, std::size_t patch_px);

struct EncoderLayerWeights {
  Tensor ln1_g, ln1_b;
  Tensor qkv_w;  // [3 d_vis x d_vis], rows ordered q, k, v
  Tensor qv_b;   // [2 d_vis]: query bias then value bias; keys have none
  Tensor o_w, o_b;
  Tensor ln2_g, ln2_b;
  Tensor fc1_w, fc1_b;  // [4 d_vis x d_vis]
  Tensor fc2_w, fc2_b;
};

struct VisionWeights {
  Tensor embed_w, embed_b;  // [d_vis x patch_dim]
  Tensor pos;               // [grid_side^2 x d_vis], learned 2-D position table
  std::vector<EncoderLayerWeights> layers;
  Tensor lnf_g, lnf_b;
};

/// Two-layer MLP from d_vis to d_model, applied to every token.
struct ProjectorWeights {
  Tensor fc1_w, fc1_b;  // [d_model x d_vis]
  Tensor fc2_w, fc2_b;  // [d_model x d_model]
};

VisionWeights init_vision(const VisionConfig& cfg, std::size_t frame_px, Rng& rng);
ProjectorWeights init_projector(const VisionConfig& cfg, Rng& rng);
/// Same layout as `w`, every tensor zero; used as a gradient accumulator.
VisionWeights zeros_like(const VisionWeights& w);
ProjectorWeights zeros_like(const ProjectorWeights& w);

// Visits every tensor with its checkpoint name, in lockstep across any number
// of structurally identical weight sets (e.g. weights and their gradients).
template <class F, class... W>
void visit_vision(F&& f, W&... ws) {
  f(std::string("vis.embed.w"), ws.embed_w...);
  f(std::string("vis.embed.b"), ws.embed_b...);
  f(std::string("vis.pos"), ws.pos...);
  const std::size_t n = (ws.layers.size(), ...);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string p = "vis.L" + std::to_string(i) + ".";
    f(p + "ln1.g", ws.layers[i].ln1_g...);
    f(p + "ln1.b", ws.layers[i].ln1_b...);
    f(p + "attn.qkv", ws.layers[i].qkv_w...);
    f(p + "attn.qv_b", ws.layers[i].qv_b...);
    f(p + "attn.o", ws.layers[i].o_w...);
    f(p + "attn.o_b", ws.layers[i].o_b...);
    f(p + "ln2.g", ws.layers[i].ln2_g...);
    f(p + "ln2.b", ws.layers[i].ln2_b...);
    f(p + "mlp.fc1", ws.layers[i].fc1_w...);
    f(p + "mlp.fc1_b", ws.layers[i].fc1_b...);
    f(p + "mlp.fc2", ws.layers[i].fc2_w...);
    f(p + "mlp.fc2_b", ws.layers[i].fc2_b...);
  }
  f(std::string("vis.lnf.g"), ws.lnf_g...);
  f(std::string("vis.lnf.b"), ws.lnf_b...);
}

template <class F, class... W>
void visit_projector(F&& f, W&... ws) {
  f(std::string("proj.fc1.w"), ws.fc1_w...);
  f(std::string("proj.fc1.b"), ws.fc1_b...);
  f(std::string("proj.fc2.w"), ws.fc2_w...);
  f(std::string("proj.fc2.b"), ws.fc2_b...);
}

struct EncoderLayerCache {
  Tensor x_in;
  num::LayerNormCache ln1;
  Tensor h1;
  num::AttentionCache attn;
  Tensor attn_out;
  Tensor x_mid;
  num::LayerNormCache ln2;
  Tensor h2;
  Tensor pre;
  Tensor act;
};

struct EncoderCache {
  Tensor patches;
  std::vector<EncoderLayerCache> layers;
  num::LayerNormCache lnf;
  std::size_t frames = 0;
  std::size_t side = 0;
};

/// Encodes already-sampled frames [T x 3 x H x W] into a (T, w, h, d_vis) grid.
///
/// Frames are processed independently: attention never crosses frames.
FeatureGrid encode_frames(const Tensor& frames, const VisionConfig& cfg, const VisionWeights& w,
                          EncoderCache* cache = nullptr);
/// Accumulates parameter gradients into `grads` given d(loss)/d(grid).
void encode_frames_backward(const EncoderCache& cache, const VisionConfig& cfg,
                            const VisionWeights& w, const Tensor& dgrid, VisionWeights& grads);

struct ProjectorCache {
  Tensor x, pre, act;
};

FeatureGrid project(const FeatureGrid& grid, const ProjectorWeights& w,
                    ProjectorCache* cache = nullptr);
/// Accumulates projector gradients; returns d(loss)/d(input grid) as [tokens x d_vis].
Tensor project_backward(const ProjectorCache& cache, const ProjectorWeights& w, const Tensor& dout,
                        ProjectorWeights& grads);

}  // namespace pllab
