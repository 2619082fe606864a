// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pllab/model/model.hpp"
#include "pllab/trainer/trainer.hpp"

namespace pllab {

/// Model geometry, training recipe, and evaluation set shared by experiment cells.
struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  std::size_t eval_size = 64;
  std::uint64_t eval_seed = 7;
};

/// One trained-and-evaluated configuration.
struct GridCell {
  std::string id;
  std::size_t frames_in = 0;
  PoolSpec spec;
};

/// Spatial shapes (n x n) are searched at `spatial_frames` input frames with no
/// temporal pooling; temporal targets at `temporal_frames`.
struct GridSearchPlan {
  std::vector<std::size_t> spatial_sizes;
  std::size_t spatial_frames = 4;
  std::vector<PoolSpec> temporal_specs;
  std::size_t temporal_frames = 16;
  std::size_t frame_px = 16;

  /// Spatial cells first, then temporal cells, in listed order.
  std::vector<GridCell> cells() const;
};

/// Grid side 4: n in {1, 2, 4} at 4 frames; (t', 2, 2) for t' in {1, 2, 4, 8, 16} at 16 frames.
GridSearchPlan desk_plan();
/// Grid side 24 (96 px frames): n in {1, 2, 4, 6, 8, 12, 16, 20, 24} at 4 frames;
/// (4|8|16, 12, 12) at 16 frames.
GridSearchPlan full_plan();
/// The nine full-scale spatial shapes against the desk geometry; shapes wider than
/// the 4x4 grid become error rows.
GridSearchPlan full_spatial_at_desk();

struct ExperimentRow {
  std::string config_id;
  std::size_t frames_in = 0;
  PoolSpec spec;
  double downsample_rate = 0.0;
  double spatial_acc = 0.0;
  double temporal_acc = 0.0;
  double mean_gen_len = 0.0;
  double max_over_median = 0.0;
  std::string status = "ok";  // otherwise the error, metrics are NaN
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
};

/// Trains (or reuses a cached checkpoint for) every cell, evaluates it with the
/// IND template, and emits one row per cell in plan order. Geometry errors
/// become error rows. Throws ArgumentError on an empty plan.
ExperimentReport grid_search(const GridSearchPlan& plan, const ExperimentConfig& base,
                             const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

/// Header `config_id,frames_in,t_out,w_out,h_out,downsample_rate,spatial_acc,temporal_acc,mean_gen_len,max_over_median,status`.
std::string grid_csv(const ExperimentReport& report);

/// Trained model for a configuration, from `cache_dir` when a checkpoint for
/// the exact (model, train) pair exists there; newly trained models are stored.
Model train_cached(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                   const std::optional<std::filesystem::path>& cache_dir);

/// Hex digest identifying a (model, train) configuration.
std::string config_key(const ModelConfig& model_cfg, const TrainConfig& train_cfg);

struct BaselineRow {
  std::string variant;  // n_frame, vcg, adaptive
  std::string prompt;   // ind, ood
  std::size_t visual_tokens = 0;
  double downsample_rate = 0.0;
  double spatial_acc = 0.0;
  double temporal_acc = 0.0;
  double mean_gen_len = 0.0;
  double max_over_median = 0.0;
};

struct BaselineReport {
  std::vector<BaselineRow> rows;
};

/// Trains n-frame, VCG-pooled and adaptive-pooled variants of `base.model`
/// (adaptive uses base.model.pool) on identical data streams and evaluates each
/// under both prompt templates: 6 rows.
BaselineReport compare_baselines(const ExperimentConfig& base,
                                 const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

/// Header `variant,prompt,visual_tokens,downsample_rate,spatial_acc,temporal_acc,mean_gen_len,max_over_median`.
std::string baselines_csv(const BaselineReport& report);

struct InferResult {
  std::string text;
  TokenSeq tokens;
  FeatureGrid features;  // pre-LLM grid
};

/// Full pipeline on one clip: sample, encode, project, pool, generate.
/// Throws ConfigError when the clip does not match the model geometry.
InferResult infer(const Model& model, const Video& video, const std::string& question, PromptStyle style,
                  std::size_t max_new = kAnswerMaxNew);

}  // namespace pllab
