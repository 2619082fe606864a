// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/model/model.hpp"

#include <cmath>
#include <cstring>

#include "pllab/diagnostics/diagnostics.hpp"
#include "pllab/errors.hpp"
#include "pllab/trainer/loss.hpp"
#include "pllab/video_io/sampling.hpp"

namespace pllab {

namespace {

constexpr std::size_t kMetaSize = 18;

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

bool is_lora_factor(const std::string& name) {
  if (!starts_with(name, "lm.") || !(ends_with(name, ".a") || ends_with(name, ".b"))) return false;
  const std::string layer = name.substr(0, name.size() - 2);
  if (layer == "lm.head") return true;
  for (const char* s : {".attn.q", ".attn.k", ".attn.v", ".attn.o", ".mlp.fc1", ".mlp.fc2"}) {
    if (ends_with(layer, s)) return true;
  }
  return false;
}

std::size_t meta_size(double v, const char* what) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e9) {
    throw FormatError(std::string("meta.model: bad ") + what, 0);
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

void ModelConfig::validate() const {
  vision.validate(frame_px);
  lm.validate();
  if (vision.d_model != lm.d_model) {
    throw ConfigError("projector width " + std::to_string(vision.d_model) + " != LM width " +
                      std::to_string(lm.d_model));
  }
  if (frames < 1) throw ConfigError("frames must be >= 1");
  const std::size_t side = grid_side();
  if (mode == PoolMode::adaptive) pool.validate(frames, side, side);
  const std::size_t n = 2 + visual_token_count();
  if (n >= lm.max_seq) {
    throw CapacityError(std::to_string(visual_token_count()) + " visual tokens leave no room for text (max_seq " +
                        std::to_string(lm.max_seq) + ")");
  }
}

std::size_t ModelConfig::visual_token_count() const {
  const std::size_t side = grid_side();
  return pllab::visual_token_count(frames, side, side, mode, pool);
}

Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng root(seed);
  Rng vis_rng = root.fork(1), proj_rng = root.fork(2), lm_rng = root.fork(3);
  Model m;
  m.config = cfg;
  m.weights.vision = init_vision(cfg.vision, cfg.frame_px, vis_rng);
  m.weights.projector = init_projector(cfg.vision, proj_rng);
  m.weights.lm = init_lm(cfg.lm, lm_rng);
  return m;
}

ModelWeights zeros_like(const ModelWeights& w) {
  return {zeros_like(w.vision), zeros_like(w.projector), zeros_like(w.lm)};
}

ParamRole param_role(const std::string& name) {
  if (starts_with(name, "vis.")) return ParamRole::encoder;
  if (starts_with(name, "proj.")) return ParamRole::projector;
  if (is_lora_factor(name)) return ParamRole::lora;
  return ParamRole::frozen;
}

void set_alpha(Model& model, double alpha) {
  if (!(alpha >= 0.0)) throw ArgumentError("alpha must be >= 0");
  set_lm_alpha(model.weights.lm, alpha);
}

TensorMap to_tensors(const Model& model) {
  TensorMap out;
  visit_model([&](const std::string& name, const Tensor& t) {
    if (!t.empty()) out.emplace(name, t);
  }, model.weights);
  const ModelConfig& c = model.config;
  std::vector<double> meta{static_cast<double>(c.frames),
                           static_cast<double>(c.frame_px),
                           static_cast<double>(c.vision.patch_px),
                           static_cast<double>(c.vision.d_vis),
                           static_cast<double>(c.vision.d_model),
                           static_cast<double>(c.vision.encoder_layers),
                           static_cast<double>(c.vision.heads),
                           static_cast<double>(c.lm.layers),
                           static_cast<double>(c.lm.heads),
                           static_cast<double>(c.lm.vocab),
                           static_cast<double>(c.lm.max_seq),
                           static_cast<double>(c.lm.lora_rank),
                           model.weights.lm.head.alpha,
                           static_cast<double>(c.pool.t_out),
                           static_cast<double>(c.pool.w_out),
                           static_cast<double>(c.pool.h_out),
                           static_cast<double>(static_cast<int>(c.mode)),
                           c.lm.train_alpha};
  out.emplace("meta.model", Tensor({kMetaSize}, std::move(meta)));
  return out;
}

Model from_tensors(const TensorMap& entries) {
  const Tensor& meta = require_entry(entries, "meta.model");
  if (meta.rank() != 1 || meta.size() != kMetaSize) {
    throw FormatError("meta.model must be a vector of " + std::to_string(kMetaSize) + " values", 0);
  }
  ModelConfig c;
  c.frames = meta_size(meta[0], "frames");
  c.frame_px = meta_size(meta[1], "frame_px");
  c.vision.patch_px = meta_size(meta[2], "patch_px");
  c.vision.d_vis = meta_size(meta[3], "d_vis");
  c.vision.d_model = meta_size(meta[4], "d_model");
  c.vision.encoder_layers = meta_size(meta[5], "encoder_layers");
  c.vision.heads = meta_size(meta[6], "encoder_heads");
  c.lm.d_model = c.vision.d_model;
  c.lm.layers = meta_size(meta[7], "lm_layers");
  c.lm.heads = meta_size(meta[8], "lm_heads");
  c.lm.vocab = meta_size(meta[9], "vocab");
  c.lm.max_seq = meta_size(meta[10], "max_seq");
  c.lm.lora_rank = meta_size(meta[11], "lora_rank");
  const double alpha = meta[12];
  c.pool = {meta_size(meta[13], "pool_t"), meta_size(meta[14], "pool_w"), meta_size(meta[15], "pool_h")};
  const std::size_t mode = meta_size(meta[16], "pool_mode");
  if (mode > 2) throw FormatError("meta.model: bad pool_mode", 0);
  c.mode = static_cast<PoolMode>(mode);
  c.lm.train_alpha = meta[17];
  if (!(alpha >= 0.0) || !(c.lm.train_alpha >= 0.0)) throw FormatError("meta.model: bad alpha", 0);

  Model m = init_model(c, 0);
  std::size_t used = 1;
  visit_model([&](const std::string& name, Tensor& t) {
    auto it = entries.find(name);
    if (it == entries.end()) {
      if (!is_lora_factor(name)) throw FormatError("checkpoint is missing entry '" + name + "'", 0);
      t = Tensor();
      return;
    }
    if (it->second.shape() != t.shape()) {
      throw FormatError("checkpoint entry '" + name + "' has shape " + shape_str(it->second.shape()) +
                            ", expected " + shape_str(t.shape()),
                        0);
    }
    t = it->second;
    ++used;
  }, m.weights);
  if (used != entries.size()) throw FormatError("checkpoint has entries this model does not use", 0);
  visit_lora_layers([](LoraLinear& l) {
    if (l.a.empty() != l.b.empty()) throw FormatError("LoRA layer has only one of its two factors", 0);
  }, m.weights.lm);
  set_alpha(m, alpha);
  return m;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  save_tensors(path, to_tensors(model));
}

Model load_model(const std::filesystem::path& path) { return from_tensors(load_tensors(path)); }

std::string format_prompt(const std::string& question, PromptStyle style) {
  if (style == PromptStyle::ind) return "USER: " + question + " ASSISTANT: ";
  return "Human: " + question + " Assistant: ";
}

Tensor sample_model_frames(const ModelConfig& cfg, const Video& video) {
  const Tensor& f = video.frames;
  if (f.rank() != 4 || f.dim(1) != 3 || video.height() != cfg.frame_px || video.width() != cfg.frame_px) {
    throw ConfigError("clip " + shape_str(f.shape()) + " does not match the model's " +
                      std::to_string(cfg.frame_px) + "x" + std::to_string(cfg.frame_px) + " RGB frames");
  }
  const auto idx = uniform_sample_indices(video.frame_count(), cfg.frames);
  return video.select(idx);
}

FeatureGrid projected_grid(const Model& model, const Video& video) {
  const ModelConfig& c = model.config;
  const FeatureGrid g = encode_frames(sample_model_frames(c, video), c.vision, model.weights.vision);
  return project(g, model.weights.projector);
}

FeatureGrid pre_llm_grid(const Model& model, const Video& video) {
  FeatureGrid g = projected_grid(model, video);
  if (model.config.mode == PoolMode::adaptive) return adaptive_pool(g, model.config.pool);
  return g;
}

Tensor visual_tokens_for(const Model& model, const Video& video) {
  return visual_tokens(projected_grid(model, video), model.config.mode, model.config.pool);
}

TokenSeq training_text(const Question& q, PromptStyle style, std::size_t* answer_begin) {
  TokenSeq ids = tokenize(format_prompt(q.prompt_text(), style));
  if (answer_begin) *answer_begin = ids.size();
  const TokenSeq ans = tokenize(q.answer());
  ids.insert(ids.end(), ans.begin(), ans.end());
  ids.push_back(kEos);
  return ids;
}

double batch_loss(const Model& model, const std::vector<TrainItem>& batch, ModelWeights* grads,
                  const GradOptions& opts) {
  const ModelConfig& c = model.config;
  const ModelWeights& w = model.weights;
  const std::size_t d = c.lm.d_model;
  std::size_t n_seq = 0;
  for (const auto& item : batch) {
    if (item.texts.size() != item.targets_from.size()) throw ArgumentError("batch_loss: texts/targets mismatch");
    n_seq += item.texts.size();
  }
  if (n_seq == 0) throw ArgumentError("batch_loss: empty batch");
  const double inv = 1.0 / static_cast<double>(n_seq);

  double total = 0.0;
  for (const auto& item : batch) {
    const bool enc_grad = grads && opts.encoder;
    EncoderCache ec;
    ProjectorCache pc;
    const FeatureGrid enc = encode_frames(sample_model_frames(c, *item.video), c.vision, w.vision,
                                          enc_grad ? &ec : nullptr);
    const FeatureGrid proj = project(enc, w.projector, grads ? &pc : nullptr);
    const Tensor visual = visual_tokens(proj, c.mode, c.pool);
    const std::size_t V = visual.rows();
    Tensor dvisual = grads ? Tensor(visual.shape()) : Tensor();

    for (std::size_t s = 0; s < item.texts.size(); ++s) {
      const TokenSeq& text = item.texts[s];
      const std::size_t from = item.targets_from[s];
      if (from >= text.size()) throw ArgumentError("batch_loss: no target positions");
      const EmbeddedSeq seq = build_input_sequence(visual, text, w.lm, c.lm);
      DecoderCache dc;
      const Tensor hidden = decoder_hidden(seq.embeddings, w.lm, c.lm, grads ? &dc : nullptr);

      // Text token j sits at 2 + V + j and is predicted from the position before it.
      const std::size_t offset = 2 + V - 1;
      const std::size_t m = text.size() - from;
      Tensor h({m, d});
      std::vector<int> targets(m);
      for (std::size_t r = 0; r < m; ++r) {
        std::memcpy(h.row(r).data(), hidden.row(offset + from + r).data(), d * sizeof(double));
        targets[r] = text[from + r];
      }
      LoraCache hc;
      const Tensor logits = lora_forward(w.lm.head, h, grads ? &hc : nullptr);
      Tensor dlogits;
      total += cross_entropy(logits, targets, std::vector<bool>(m, true), grads ? &dlogits : nullptr);
      if (!grads) continue;

      const Tensor dh = lora_backward(w.lm.head, hc, num::scale(dlogits, inv), grads->lm.head);
      Tensor dhidden(hidden.shape());
      for (std::size_t r = 0; r < m; ++r) {
        std::memcpy(dhidden.row(offset + from + r).data(), dh.row(r).data(), d * sizeof(double));
      }
      const Tensor demb = decoder_hidden_backward(dc, w.lm, c.lm, dhidden, grads->lm);
      for (std::size_t v = 0; v < V; ++v) {
        auto dst = dvisual.row(v);
        auto src = demb.row(seq.visual_begin + v);
        for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
      }
    }
    if (!grads) continue;
    const Tensor dgrid = visual_tokens_backward(dvisual, proj.tensor().shape(), c.mode, c.pool);
    const Tensor denc = project_backward(pc, w.projector, dgrid, grads->projector);
    if (enc_grad) encode_frames_backward(ec, c.vision, w.vision, denc, grads->vision);
  }
  return total * inv;
}

std::string answer_question(const Model& model, const Tensor& visual, const std::string& question,
                            PromptStyle style, std::size_t max_new, std::size_t* gen_len) {
  const TokenSeq out =
      greedy_generate(model.weights.lm, model.config.lm, visual, tokenize(format_prompt(question, style)), max_new);
  if (gen_len) *gen_len = out.size();
  return detokenize(out);
}

EvalResult evaluate(const Model& model, const std::vector<SynthSample>& samples, PromptStyle style,
                    std::size_t max_new) {
  std::vector<Tensor> visual;
  visual.reserve(samples.size());
  for (const auto& s : samples) visual.push_back(visual_tokens_for(model, s.video));
  return evaluate(model, samples, visual, style, max_new);
}

EvalResult evaluate(const Model& model, const std::vector<SynthSample>& samples,
                    const std::vector<Tensor>& visual, PromptStyle style, std::size_t max_new) {
  if (samples.empty()) throw ArgumentError("evaluation set is empty");
  if (visual.size() != samples.size()) throw ArgumentError("evaluate: one visual token set per sample");
  std::size_t spatial_ok = 0, temporal_ok = 0, spatial_n = 0, temporal_n = 0, total_len = 0;
  EvalResult r;
  std::size_t token_rows = 0;
  for (const auto& v : visual) token_rows += v.rows();
  Tensor all_tokens({token_rows, model.config.lm.d_model});
  std::size_t row = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::memcpy(all_tokens.row(row).data(), visual[i].data(), visual[i].size() * sizeof(double));
    row += visual[i].rows();
    for (const auto& q : samples[i].questions) {
      std::size_t len = 0;
      const bool ok = answer_question(model, visual[i], q.prompt_text(), style, max_new, &len) == q.answer();
      r.lengths.push_back(len);
      total_len += len;
      if (q.kind == QuestionKind::spatial) {
        ++spatial_n;
        spatial_ok += ok;
      } else {
        ++temporal_n;
        temporal_ok += ok;
      }
    }
  }
  r.spatial_acc = spatial_n ? static_cast<double>(spatial_ok) / static_cast<double>(spatial_n) : 0.0;
  r.temporal_acc = temporal_n ? static_cast<double>(temporal_ok) / static_cast<double>(temporal_n) : 0.0;
  r.mean_gen_len = static_cast<double>(total_len) / static_cast<double>(r.lengths.size());
  r.max_over_median = token_norms(all_tokens).max_over_median;
  return r;
}

}  // namespace pllab
