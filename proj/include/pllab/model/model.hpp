// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pllab/lm/decoder.hpp"
#include "pllab/pooling/pooling.hpp"
#include "pllab/video_io/plck.hpp"
#include "pllab/video_io/synth.hpp"
#include "pllab/vision/encoder.hpp"

namespace pllab {

/// End-to-end video LLM: sample frames -> encode -> project -> pool -> LM.
struct ModelConfig {
  VisionConfig vision;
  LmConfig lm;
  std::size_t frames = 16;    // frames sampled per clip
  std::size_t frame_px = 16;  // square frame side in pixels
  PoolMode mode = PoolMode::adaptive;
  PoolSpec pool{16, 2, 2};

  /// Throws DimensionError / ConfigError on inconsistent geometry.
  void validate() const;
  std::size_t grid_side() const { return vision.grid_side(frame_px); }
  std::size_t visual_token_count() const;
};

struct ModelWeights {
  VisionWeights vision;
  ProjectorWeights projector;
  LmWeights lm;
};

struct Model {
  ModelConfig config;
  ModelWeights weights;
};

Model init_model(const ModelConfig& cfg, std::uint64_t seed);
ModelWeights zeros_like(const ModelWeights& w);

template <class F, class... W>
void visit_model(F&& f, W&... ws) {
  visit_vision(f, ws.vision...);
  visit_projector(f, ws.projector...);
  visit_lm(f, ws.lm...);
}

/// Which optimizer group a checkpoint entry belongs to.
enum class ParamRole { encoder, projector, lora, frozen };
ParamRole param_role(const std::string& name);

/// Sets alpha on every LoraLinear in the LM. Throws ArgumentError if alpha < 0.
void set_alpha(Model& model, double alpha);

// Checkpoints are PLCK files holding every weight under its visitor name plus
// "meta.model", a [18] vector:
//   frames, frame_px, patch_px, d_vis, d_model, encoder_layers, encoder_heads,
//   lm_layers, lm_heads, vocab, max_seq, lora_rank, alpha, pool_t, pool_w,
//   pool_h, pool_mode (0 adaptive, 1 n_frame, 2 vcg), train_alpha
// Merged checkpoints simply omit the ".a" / ".b" factors.
TensorMap to_tensors(const Model& model);
Model from_tensors(const TensorMap& entries);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

enum class PromptStyle { ind, ood };

/// "USER: {q} ASSISTANT: " (training format) or "Human: {q} Assistant: ".
std::string format_prompt(const std::string& question, PromptStyle style);

/// Frames selected by uniform sampling; throws ConfigError if the clip geometry
/// does not match the model.
Tensor sample_model_frames(const ModelConfig& cfg, const Video& video);

/// Projected, un-pooled feature grid (T, w, h, d_model) for a clip.
FeatureGrid projected_grid(const Model& model, const Video& video);
/// The grid handed to the LM: adaptive-pooled for adaptive mode, else the projected grid.
FeatureGrid pre_llm_grid(const Model& model, const Video& video);
/// Visual token sequence [n x d_model] for a clip.
Tensor visual_tokens_for(const Model& model, const Video& video);

/// One clip and the text sequences trained against it.
struct TrainItem {
  const Video* video = nullptr;
  std::vector<TokenSeq> texts;         // prompt, answer, EOS
  std::vector<std::size_t> targets_from;  // first text index counted by the loss
};

/// Prompt + answer + EOS for a question; `answer_begin` is where the answer starts.
TokenSeq training_text(const Question& q, PromptStyle style, std::size_t* answer_begin);

struct GradOptions {
  bool encoder = true;  // backpropagate into the vision encoder
};

/// Mean over sequences of the per-sequence mean next-token loss on
/// text positions >= targets_from. Accumulates d(loss)/d(weight) into `grads`
/// when given (encoder gradients only with opts.encoder).
double batch_loss(const Model& model, const std::vector<TrainItem>& batch, ModelWeights* grads,
                  const GradOptions& opts = {});

/// Greedy answer to a question about a clip, as text.
std::string answer_question(const Model& model, const Tensor& visual, const std::string& question,
                            PromptStyle style, std::size_t max_new, std::size_t* gen_len = nullptr);

struct EvalResult {
  double spatial_acc = 0.0;
  double temporal_acc = 0.0;
  double mean_gen_len = 0.0;
  double max_over_median = 0.0;  // visual-token norms over the whole set
  std::vector<std::size_t> lengths;
};

inline constexpr std::size_t kAnswerMaxNew = 8;

/// Exact-match accuracy of greedy answers on both questions of every sample.
EvalResult evaluate(const Model& model, const std::vector<SynthSample>& samples, PromptStyle style,
                    std::size_t max_new = kAnswerMaxNew);
/// Same, reusing visual tokens computed earlier (they do not depend on alpha).
EvalResult evaluate(const Model& model, const std::vector<SynthSample>& samples,
                    const std::vector<Tensor>& visual, PromptStyle style,
                    std::size_t max_new = kAnswerMaxNew);

}  // namespace pllab
