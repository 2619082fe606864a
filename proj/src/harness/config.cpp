// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/harness/config.hpp"

#include <fstream>
#include <set>

#include "pllab/errors.hpp"

namespace pllab {

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ConfigError(std::string("unknown key '") + k + "' in " + section);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError("");
      }
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("");
      out = v.get<T>();
    } else {
      out = v.get<T>();
    }
  } catch (const std::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j, "config", {"model", "train", "eval"});
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model", {"frames", "frame_px", "patch_px", "d_vis", "d_model", "encoder_layers", "encoder_heads",
                            "lm_layers", "lm_heads", "max_seq", "lora_rank", "train_alpha", "pool_mode", "pool"});
    auto& mc = c.model;
    read(m, "frames", mc.frames);
    read(m, "frame_px", mc.frame_px);
    read(m, "patch_px", mc.vision.patch_px);
    read(m, "d_vis", mc.vision.d_vis);
    read(m, "d_model", mc.vision.d_model);
    mc.lm.d_model = mc.vision.d_model;
    read(m, "encoder_layers", mc.vision.encoder_layers);
    read(m, "encoder_heads", mc.vision.heads);
    read(m, "lm_layers", mc.lm.layers);
    read(m, "lm_heads", mc.lm.heads);
    read(m, "max_seq", mc.lm.max_seq);
    read(m, "lora_rank", mc.lm.lora_rank);
    read(m, "train_alpha", mc.lm.train_alpha);
    if (m.contains("pool_mode")) {
      std::string mode;
      read(m, "pool_mode", mode);
      try {
        mc.mode = pool_mode_from_string(mode);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }
    if (m.contains("pool")) {
      std::vector<std::size_t> p;
      read(m, "pool", p);
      if (p.size() != 3) throw ConfigError("model.pool must be [t, w, h]");
      mc.pool = {p[0], p[1], p[2]};
    }
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train", {"batch_size", "peak_lr", "total_steps", "warmup_ratio", "seed", "answer_only_loss",
                            "train_encoder", "weight_decay", "dataset_size", "checkpoint_every", "beta1", "beta2",
                            "eps"});
    auto& tc = c.train;
    read(t, "batch_size", tc.batch_size);
    read(t, "peak_lr", tc.peak_lr);
    read(t, "total_steps", tc.total_steps);
    read(t, "warmup_ratio", tc.warmup_ratio);
    read(t, "seed", tc.seed);
    read(t, "answer_only_loss", tc.answer_only_loss);
    read(t, "train_encoder", tc.train_encoder);
    read(t, "weight_decay", tc.weight_decay);
    read(t, "dataset_size", tc.dataset_size);
    read(t, "checkpoint_every", tc.checkpoint_every);
    read(t, "beta1", tc.beta1);
    read(t, "beta2", tc.beta2);
    read(t, "eps", tc.eps);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, "eval", {"size", "seed"});
    read(e, "size", c.eval_size);
    read(e, "seed", c.eval_seed);
  }
  c.train.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  return {{"model",
           {{"frames", m.frames},
            {"frame_px", m.frame_px},
            {"patch_px", m.vision.patch_px},
            {"d_vis", m.vision.d_vis},
            {"d_model", m.vision.d_model},
            {"encoder_layers", m.vision.encoder_layers},
            {"encoder_heads", m.vision.heads},
            {"lm_layers", m.lm.layers},
            {"lm_heads", m.lm.heads},
            {"max_seq", m.lm.max_seq},
            {"lora_rank", m.lm.lora_rank},
            {"train_alpha", m.lm.train_alpha},
            {"pool_mode", to_string(m.mode)},
            {"pool", {m.pool.t_out, m.pool.w_out, m.pool.h_out}}}},
          {"train",
           {{"batch_size", t.batch_size},
            {"peak_lr", t.peak_lr},
            {"total_steps", t.total_steps},
            {"warmup_ratio", t.warmup_ratio},
            {"seed", t.seed},
            {"answer_only_loss", t.answer_only_loss},
            {"train_encoder", t.train_encoder},
            {"weight_decay", t.weight_decay},
            {"dataset_size", t.dataset_size},
            {"checkpoint_every", t.checkpoint_every},
            {"beta1", t.beta1},
            {"beta2", t.beta2},
            {"eps", t.eps}}},
          {"eval", {{"size", c.eval_size}, {"seed", c.eval_seed}}}};
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return experiment_config_from_json(j);
}

}  // namespace pllab
