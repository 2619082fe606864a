// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pllab/model/model.hpp"

namespace pllab {

/// w0 + (alpha / rank) * b * a; just w0 for a layer without an adapter.
/// Throws ArgumentError if alpha < 0.
Tensor merge_lora(const LoraLinear& layer, double alpha);

/// Copy of `model` whose LoRA layers are plain weights merged at `alpha`.
Model merge_model(const Model& model, double alpha);

struct AlphaSweepRow {
  double alpha = 0.0;
  double spatial_acc = 0.0;
  double temporal_acc = 0.0;
  double mean_gen_len = 0.0;
};

struct AlphaSweepReport {
  std::vector<AlphaSweepRow> rows;
};

/// 0, 4, ..., 32.
std::vector<double> default_alphas();

/// Evaluates the model at every alpha. Visual tokens are computed once since
/// alpha only affects the LM. Throws ArgumentError for an empty eval set or
/// alphas that are empty, negative, or not strictly increasing.
AlphaSweepReport alpha_sweep(const Model& model, const std::vector<SynthSample>& eval_set,
                             const std::vector<double>& alphas, PromptStyle style = PromptStyle::ind);

/// Header `alpha,spatial_acc,temporal_acc,mean_gen_len`.
std::string sweep_csv(const AlphaSweepReport& report);

}  // namespace pllab
