// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/harness/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "pllab/diagnostics/report.hpp"
#include "pllab/errors.hpp"

namespace pllab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string cell_id(const char* kind, std::size_t frames, const PoolSpec& s) {
  return std::string(kind) + "-f" + std::to_string(frames) + "-" + std::to_string(s.t_out) + "x" +
         std::to_string(s.w_out) + "x" + std::to_string(s.h_out);
}

std::string csv_field(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  }
  return s;
}

}  // namespace

std::vector<GridCell> GridSearchPlan::cells() const {
  std::vector<GridCell> out;
  for (std::size_t n : spatial_sizes) {
    const PoolSpec s{spatial_frames, n, n};
    out.push_back({cell_id("spatial", spatial_frames, s), spatial_frames, s});
  }
  for (const auto& s : temporal_specs) out.push_back({cell_id("temporal", temporal_frames, s), temporal_frames, s});
  return out;
}

GridSearchPlan desk_plan() {
  GridSearchPlan p;
  p.spatial_sizes = {1, 2, 4};
  p.spatial_frames = 4;
  for (std::size_t t : {1, 2, 4, 8, 16}) p.temporal_specs.push_back({t, 2, 2});
  p.temporal_frames = 16;
  p.frame_px = 16;
  return p;
}

GridSearchPlan full_plan() {
  GridSearchPlan p;
  p.spatial_sizes = {1, 2, 4, 6, 8, 12, 16, 20, 24};
  p.spatial_frames = 4;
  p.temporal_specs = {{4, 12, 12}, {8, 12, 12}, {16, 12, 12}};
  p.temporal_frames = 16;
  p.frame_px = 96;
  return p;
}

GridSearchPlan full_spatial_at_desk() {
  GridSearchPlan p = full_plan();
  p.temporal_specs.clear();
  p.frame_px = 16;
  return p;
}

std::string config_key(const ModelConfig& m, const TrainConfig& t) {
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "v1|%zu|%zu|%zu|%zu|%zu|%zu|%zu|%zu|%zu|%zu|%zu|%zu|%.17g|%d|%zu|%zu|%zu|"
                "%zu|%zu|%.17g|%zu|%.17g|%llu|%d|%d|%.17g|%zu|%.17g|%.17g|%.17g",
                m.frames, m.frame_px, m.vision.patch_px, m.vision.d_vis, m.vision.d_model, m.vision.encoder_layers,
                m.vision.heads, m.lm.d_model, m.lm.layers, m.lm.heads, m.lm.vocab, m.lm.max_seq, m.lm.train_alpha,
                static_cast<int>(m.mode), m.pool.t_out, m.pool.w_out, m.pool.h_out, m.lm.lora_rank, t.batch_size, t.peak_lr,
                t.total_steps, t.warmup_ratio, static_cast<unsigned long long>(t.seed), t.answer_only_loss ? 1 : 0,
                t.train_encoder ? 1 : 0, t.weight_decay, t.dataset_size, t.beta1, t.beta2, t.eps);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(buf)));
  return hex;
}

Model train_cached(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                   const std::optional<std::filesystem::path>& cache_dir) {
  std::filesystem::path path;
  if (cache_dir) {
    path = *cache_dir / (config_key(model_cfg, train_cfg) + ".plck");
    if (std::filesystem::exists(path)) return load_model(path);
  }
  Model m = init_model(model_cfg, train_cfg.seed);
  train(train_cfg, m);
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    // Write-then-rename so an interrupted run never leaves a truncated entry.
    const auto tmp = path.string() + ".tmp";
    save_model(tmp, m);
    std::filesystem::rename(tmp, path);
  }
  return m;
}

ExperimentReport grid_search(const GridSearchPlan& plan, const ExperimentConfig& base,
                             const std::optional<std::filesystem::path>& cache_dir) {
  const auto cells = plan.cells();
  if (cells.empty()) throw ArgumentError("grid search plan is empty");
  SynthOptions opts;
  opts.grid_px = plan.frame_px;
  const auto eval_set = gen_synth_set(base.eval_seed, base.eval_size, opts);

  ExperimentReport report;
  for (const auto& cell : cells) {
    ExperimentRow row;
    row.config_id = cell.id;
    row.frames_in = cell.frames_in;
    row.spec = cell.spec;
    ModelConfig mc = base.model;
    mc.frames = cell.frames_in;
    mc.frame_px = plan.frame_px;
    mc.mode = PoolMode::adaptive;
    mc.pool = cell.spec;
    try {
      mc.validate();
      row.downsample_rate = downsample_rate(cell.frames_in, cell.spec.t_out);
    } catch (const Error& e) {
      row.downsample_rate = row.spatial_acc = row.temporal_acc = row.mean_gen_len = row.max_over_median = kNan;
      row.status = csv_field(std::string("error: ") + e.what());
      report.rows.push_back(row);
      continue;
    }
    const Model m = train_cached(mc, base.train, cache_dir);
    const EvalResult r = evaluate(m, eval_set, PromptStyle::ind);
    row.spatial_acc = r.spatial_acc;
    row.temporal_acc = r.temporal_acc;
    row.mean_gen_len = r.mean_gen_len;
    row.max_over_median = r.max_over_median;
    report.rows.push_back(row);
  }
  return report;
}

std::string grid_csv(const ExperimentReport& report) {
  std::string s =
      "config_id,frames_in,t_out,w_out,h_out,downsample_rate,spatial_acc,temporal_acc,mean_gen_len,max_over_median,"
      "status\n";
  for (const auto& r : report.rows) {
    s += r.config_id + "," + std::to_string(r.frames_in) + "," + std::to_string(r.spec.t_out) + "," +
         std::to_string(r.spec.w_out) + "," + std::to_string(r.spec.h_out) + "," + format_number(r.downsample_rate) +
         "," + format_number(r.spatial_acc) + "," + format_number(r.temporal_acc) + "," +
         format_number(r.mean_gen_len) + "," + format_number(r.max_over_median) + "," + r.status + "\n";
  }
  return s;
}

BaselineReport compare_baselines(const ExperimentConfig& base, const std::optional<std::filesystem::path>& cache_dir) {
  SynthOptions opts;
  opts.grid_px = base.model.frame_px;
  const auto eval_set = gen_synth_set(base.eval_seed, base.eval_size, opts);
  BaselineReport report;
  for (PoolMode mode : {PoolMode::n_frame, PoolMode::vcg, PoolMode::adaptive}) {
    ModelConfig mc = base.model;
    mc.mode = mode;
    mc.validate();
    const Model m = train_cached(mc, base.train, cache_dir);
    const double rate =
        mode == PoolMode::adaptive ? downsample_rate(mc.frames, mc.pool.t_out) : 1.0;
    std::vector<Tensor> visual;
    for (const auto& s : eval_set) visual.push_back(visual_tokens_for(m, s.video));
    for (PromptStyle style : {PromptStyle::ind, PromptStyle::ood}) {
      const EvalResult r = evaluate(m, eval_set, visual, style);
      report.rows.push_back({to_string(mode), style == PromptStyle::ind ? "ind" : "ood", mc.visual_token_count(), rate,
                             r.spatial_acc, r.temporal_acc, r.mean_gen_len, r.max_over_median});
    }
  }
  return report;
}

std::string baselines_csv(const BaselineReport& report) {
  std::string s = "variant,prompt,visual_tokens,downsample_rate,spatial_acc,temporal_acc,mean_gen_len,max_over_median\n";
  for (const auto& r : report.rows) {
    s += r.variant + "," + r.prompt + "," + std::to_string(r.visual_tokens) + "," + format_number(r.downsample_rate) +
         "," + format_number(r.spatial_acc) + "," + format_number(r.temporal_acc) + "," +
         format_number(r.mean_gen_len) + "," + format_number(r.max_over_median) + "\n";
  }
  return s;
}

InferResult infer(const Model& model, const Video& video, const std::string& question, PromptStyle style,
                  std::size_t max_new) {
  InferResult r;
  const FeatureGrid grid = projected_grid(model, video);
  const Tensor visual = visual_tokens(grid, model.config.mode, model.config.pool);
  r.features = model.config.mode == PoolMode::adaptive ? adaptive_pool(grid, model.config.pool) : grid;
  r.tokens = greedy_generate(model.weights.lm, model.config.lm, visual, tokenize(format_prompt(question, style)),
                             max_new);
  r.text = detokenize(r.tokens);
  return r;
}

}  // namespace pllab
