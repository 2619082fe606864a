// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "pllab/errors.hpp"

namespace pllab {

namespace {

constexpr std::uint64_t kDataStream = 0xDA7A;

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw ConfigError("warmup_ratio must lie in [0, 1)");
  if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) throw ConfigError("peak_lr must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
}

double lr_at(std::size_t step, const TrainConfig& cfg) {
  if (step > cfg.total_steps) {
    throw ArgumentError("lr_at: step " + std::to_string(step) + " outside [0, " + std::to_string(cfg.total_steps) +
                        "]");
  }
  const auto warmup = static_cast<std::size_t>(std::llround(cfg.warmup_ratio * static_cast<double>(cfg.total_steps)));
  if (step < warmup) return cfg.peak_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const std::size_t span = cfg.total_steps - warmup;
  if (span == 0) return 0.0;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(span);
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void AdamW::update(const std::string& name, Tensor& param, const Tensor& grad, double lr, double weight_decay) {
  if (grad.shape() != param.shape()) throw DimensionError("AdamW: gradient shape mismatch for " + name);
  if (t_ == 0) throw ArgumentError("AdamW: begin_step() not called");
  auto [it, fresh] = state_.try_emplace(name);
  Moments& s = it->second;
  if (fresh) {
    s.m = Tensor(param.shape());
    s.v = Tensor(param.shape());
  }
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
    s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    param[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay * param[i]);
  }
}

DataStream::DataStream(std::uint64_t seed, std::size_t dataset_size, SynthOptions opts)
    : rng_(Rng(seed).fork(kDataStream)), opts_(opts) {
  if (dataset_size > 0) {
    fixed_.reserve(dataset_size);
    for (std::size_t i = 0; i < dataset_size; ++i) fixed_.push_back(gen_synth_sample(rng_, opts_));
    order_.resize(dataset_size);
    for (std::size_t i = 0; i < dataset_size; ++i) order_[i] = i;
  }
}

Example DataStream::next_example() {
  if (!fixed_.empty()) {
    // Walk clips in order_, two questions each; reshuffle at every epoch start.
    const std::size_t per_clip = 2;
    if (cursor_ == 0) {
      for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
    }
    const Example e{&fixed_[order_[cursor_ / per_clip]], cursor_ % per_clip};
    cursor_ = (cursor_ + 1) % (order_.size() * per_clip);
    return e;
  }
  if (!has_current_ || cursor_ == 2) {
    window_.push_back(gen_synth_sample(rng_, opts_));
    has_current_ = true;
    cursor_ = 0;
  }
  return {&window_.back(), cursor_++};
}

std::vector<Example> DataStream::next_batch(std::size_t batch_size) {
  if (fixed_.empty()) {
    // Keep only the clip that may continue into this batch.
    if (window_.size() > 1) window_.erase(window_.begin(), window_.end() - 1);
    window_.reserve(batch_size + 1);
  }
  std::vector<Example> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) out.push_back(next_example());
  return out;
}

std::vector<TrainItem> make_train_items(const std::vector<Example>& examples, PromptStyle style,
                                        bool answer_only) {
  std::vector<TrainItem> items;
  for (const auto& e : examples) {
    if (items.empty() || items.back().video != &e.sample->video) {
      items.push_back({});
      items.back().video = &e.sample->video;
    }
    std::size_t answer_begin = 0;
    items.back().texts.push_back(training_text(e.sample->questions[e.question], style, &answer_begin));
    items.back().targets_from.push_back(answer_only ? answer_begin : 0);
  }
  return items;
}

SynthOptions synth_options_for(const ModelConfig& cfg) {
  SynthOptions o;
  o.grid_px = cfg.frame_px;
  return o;
}

Trainer::Trainer(const TrainConfig& cfg, Model model)
    : cfg_(cfg),
      model_(std::move(model)),
      stream_(cfg.seed, cfg.dataset_size, synth_options_for(model_.config)),
      opt_(cfg.beta1, cfg.beta2, cfg.eps) {
  cfg_.validate();
  model_.config.validate();
  grads_ = zeros_like(model_.weights);
}

double Trainer::step() {
  if (done()) throw ArgumentError("training already finished");
  const double lr = lr_at(step_, cfg_);
  const auto items = make_train_items(stream_.next_batch(cfg_.batch_size), PromptStyle::ind, cfg_.answer_only_loss);
  visit_model([](const std::string&, Tensor& g) { g.fill(0.0); }, grads_);
  const double loss = batch_loss(model_, items, &grads_, GradOptions{cfg_.train_encoder});
  if (!std::isfinite(loss)) throw NumericError("non-finite loss at step " + std::to_string(step_));

  opt_.begin_step();
  visit_model([&](const std::string& name, Tensor& p, Tensor& g) {
    if (p.empty()) return;
    switch (param_role(name)) {
      case ParamRole::encoder:
        if (cfg_.train_encoder) opt_.update(name, p, g, lr, cfg_.weight_decay);
        break;
      case ParamRole::projector:
        opt_.update(name, p, g, lr, cfg_.weight_decay);
        break;
      case ParamRole::lora:
        opt_.update(name, p, g, lr, 0.0);
        break;
      case ParamRole::frozen:
        break;
    }
  }, model_.weights, grads_);
  log_.push_back({step_, lr, loss});
  ++step_;
  return loss;
}

double Trainer::dataset_loss() const {
  const auto& set = stream_.dataset();
  if (set.empty()) throw ArgumentError("dataset_loss needs a fixed dataset");
  std::vector<Example> all;
  for (const auto& s : set) {
    for (std::size_t q = 0; q < s.questions.size(); ++q) all.push_back({&s, q});
  }
  return batch_loss(model_, make_train_items(all, PromptStyle::ind, cfg_.answer_only_loss), nullptr);
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << "step,lr,loss\n";
  char buf[96];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.step, r.lr, r.loss);
    f << buf;
  }
  if (!f) throw Error("failed writing " + path.string());
}

std::vector<LossRecord> train(const TrainConfig& cfg, Model& model, const TrainOutputs& out) {
  Trainer t(cfg, std::move(model));
  try {
    while (!t.done()) {
      t.step();
      if (!out.checkpoint.empty() && cfg.checkpoint_every > 0 && t.steps_done() % cfg.checkpoint_every == 0 &&
          !t.done()) {
        save_model(out.checkpoint, t.model());
      }
    }
  } catch (const NumericError&) {
    if (!out.loss_log.empty()) write_loss_csv(out.loss_log, t.log());
    model = t.model();
    throw;
  }
  if (!out.checkpoint.empty()) save_model(out.checkpoint, t.model());
  if (!out.loss_log.empty()) write_loss_csv(out.loss_log, t.log());
  model = t.model();
  return t.log();
}

}  // namespace pllab
