// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <json.hpp>

#include "pllab/harness/experiments.hpp"

namespace pllab {

// Run configuration JSON (all keys optional, unknown keys rejected):
//
//   {"model": {"frames", "frame_px", "patch_px", "d_vis", "d_model",
//              "encoder_layers", "encoder_heads", "lm_layers", "lm_heads",
//              "max_seq", "lora_rank", "train_alpha",
//              "pool_mode": "adaptive" | "n_frame" | "vcg", "pool": [t, w, h]},
//    "train": {"batch_size", "peak_lr", "total_steps", "warmup_ratio", "seed",
//              "answer_only_loss", "train_encoder", "weight_decay",
//              "dataset_size", "checkpoint_every", "beta1", "beta2", "eps"},
//    "eval":  {"size", "seed"}}
//
// Throws ConfigError on unknown keys or mistyped values.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace pllab
