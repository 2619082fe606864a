// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pllab/model/model.hpp"
#include "pllab/numerics/rng.hpp"

namespace pllab {

struct TrainConfig {
  std::size_t batch_size = 8;  // question/answer sequences per step
  double peak_lr = 2e-4;
  std::size_t total_steps = 2000;
  double warmup_ratio = 0.03;
  std::uint64_t seed = 42;
  bool answer_only_loss = true;  // false: every text token is a target
  bool train_encoder = true;
  double weight_decay = 0.0;      // encoder and projector only; LoRA factors never decay
  std::size_t dataset_size = 0;   // 0: fresh clips every batch; N: a fixed set of N clips
  std::size_t checkpoint_every = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Throws ConfigError.
  void validate() const;
};

/// warmup = round(warmup_ratio * total_steps); linear ramp peak * (step + 1) / warmup
/// for step < warmup, then cosine decay reaching 0 at total_steps.
/// Throws ArgumentError unless 0 <= step <= total_steps.
double lr_at(std::size_t step, const TrainConfig& cfg);

/// AdamW with decoupled weight decay; moments are kept per parameter name.
class AdamW {
 public:
  AdamW(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Advances the shared step counter used for bias correction; call once per step.
  void begin_step() { ++t_; }
  void update(const std::string& name, Tensor& param, const Tensor& grad, double lr, double weight_decay);
  std::size_t steps() const { return t_; }

 private:
  struct Moments {
    Tensor m, v;
  };
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::map<std::string, Moments> state_;
};

/// One question about one clip.
struct Example {
  const SynthSample* sample = nullptr;
  std::size_t question = 0;
};

/// Deterministic example stream. A fixed set is revisited in a freshly shuffled
/// clip order every epoch; otherwise every clip is new. Both questions of a
/// clip are always adjacent. Returned pointers stay valid until the next call
/// (fixed-set pointers for the stream's lifetime).
class DataStream {
 public:
  DataStream(std::uint64_t seed, std::size_t dataset_size, SynthOptions opts);
  std::vector<Example> next_batch(std::size_t batch_size);
  const std::vector<SynthSample>& dataset() const { return fixed_; }

 private:
  Example next_example();

  Rng rng_;
  SynthOptions opts_;
  std::vector<SynthSample> fixed_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;  // position in order_ (fixed) or question index (fresh)
  std::vector<SynthSample> window_;
  bool has_current_ = false;
};

/// Groups examples of the same clip into loss items.
std::vector<TrainItem> make_train_items(const std::vector<Example>& examples, PromptStyle style,
                                        bool answer_only);

struct LossRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

/// Owns the model, optimizer, and data stream of one run.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, Model model);

  /// One optimizer step; returns the batch loss before the update.
  /// Throws NumericError naming the step on a non-finite loss.
  double step();
  bool done() const { return step_ >= cfg_.total_steps; }
  std::size_t steps_done() const { return step_; }

  /// Loss over every question of the fixed set (dataset_size > 0).
  double dataset_loss() const;

  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<LossRecord>& log() const { return log_; }
  const std::vector<SynthSample>& dataset() const { return stream_.dataset(); }

 private:
  TrainConfig cfg_;
  Model model_;
  DataStream stream_;
  AdamW opt_;
  ModelWeights grads_;
  std::size_t step_ = 0;
  std::vector<LossRecord> log_;
};

/// `step,lr,loss` with round-trip precision.
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log);

struct TrainOutputs {
  std::filesystem::path checkpoint;  // empty: not written
  std::filesystem::path loss_log;    // empty: not written
};

/// Runs the configured number of steps. The checkpoint is written every
/// `checkpoint_every` steps (overwriting) and at the end; on a numeric failure
/// the partial loss log is written before the error propagates.
std::vector<LossRecord> train(const TrainConfig& cfg, Model& model, const TrainOutputs& out = {});

/// Clip geometry the trainer generates for a model.
SynthOptions synth_options_for(const ModelConfig& cfg);

}  // namespace pllab
