// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/postopt/postopt.hpp"

#include "pllab/diagnostics/report.hpp"
#include "pllab/errors.hpp"

namespace pllab {

Tensor merge_lora(const LoraLinear& layer, double alpha) {
  if (!(alpha >= 0.0)) throw ArgumentError("merge alpha must be >= 0");
  layer.validate();
  if (!layer.has_adapter()) return layer.w0;
  Tensor w = layer.w0;
  if (alpha == 0.0) return w;
  num::add_into(w, num::matmul(layer.b, layer.a), alpha / static_cast<double>(layer.rank));
  return w;
}

Model merge_model(const Model& model, double alpha) {
  Model out = model;
  visit_lora_layers([&](LoraLinear& l) {
    l.w0 = merge_lora(l, alpha);
    l.a = Tensor();
    l.b = Tensor();
  }, out.weights.lm);
  set_alpha(out, alpha);
  return out;
}

std::vector<double> default_alphas() {
  std::vector<double> a;
  for (int i = 0; i <= 32; i += 4) a.push_back(i);
  return a;
}

AlphaSweepReport alpha_sweep(const Model& model, const std::vector<SynthSample>& eval_set,
                             const std::vector<double>& alphas, PromptStyle style) {
  if (eval_set.empty()) throw ArgumentError("alpha sweep: empty evaluation set");
  if (alphas.empty()) throw ArgumentError("alpha sweep: no alphas");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0)) throw ArgumentError("alpha sweep: alphas must be >= 0");
    if (i > 0 && !(alphas[i] > alphas[i - 1])) throw ArgumentError("alpha sweep: alphas must be strictly increasing");
  }
  std::vector<Tensor> visual;
  visual.reserve(eval_set.size());
  for (const auto& s : eval_set) visual.push_back(visual_tokens_for(model, s.video));

  AlphaSweepReport report;
  Model view = model;
  for (double a : alphas) {
    set_alpha(view, a);
    const EvalResult r = evaluate(view, eval_set, visual, style);
    report.rows.push_back({a, r.spatial_acc, r.temporal_acc, r.mean_gen_len});
  }
  return report;
}

std::string sweep_csv(const AlphaSweepReport& report) {
  std::string s = "alpha,spatial_acc,temporal_acc,mean_gen_len\n";
  for (const auto& r : report.rows) {
    s += format_number(r.alpha) + "," + format_number(r.spatial_acc) + "," + format_number(r.temporal_acc) + "," +
         format_number(r.mean_gen_len) + "\n";
  }
  return s;
}

}  // namespace pllab
