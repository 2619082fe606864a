// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/harness/cli.hpp"

#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pllab/diagnostics/report.hpp"
#include "pllab/errors.hpp"
#include "pllab/harness/config.hpp"
#include "pllab/harness/experiments.hpp"
#include "pllab/postopt/postopt.hpp"
#include "pllab/video_io/dataset.hpp"

namespace pllab {

namespace {

struct Globals {
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::string config;
  std::string out;
};

void require_out(const Globals& g) {
  if (g.out.empty()) throw ArgumentError("--out is required");
}

ExperimentConfig base_config(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_experiment_config(g.config);
  if (g.seed_given) c.train.seed = g.seed;
  return c;
}

PoolSpec parse_spec(const std::vector<std::size_t>& v) {
  if (v.size() != 3) throw ArgumentError("--spec takes t,w,h");
  return {v[0], v[1], v[2]};
}

std::optional<std::filesystem::path> cache_dir_from_env() {
  const char* dir = std::getenv("PLLAB_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return std::filesystem::path(dir);
}

// Clip for `infer`: a sample-set file (indexed), a file with a "video" entry, or a synthetic seed.
struct ClipSource {
  std::string video;
  std::size_t index = 0;
  std::optional<std::uint64_t> synth_seed;
};

SynthSample load_clip(const ClipSource& src, std::size_t frame_px) {
  if (src.synth_seed) {
    Rng rng(*src.synth_seed);
    return gen_synth_sample(rng, frame_px);
  }
  if (src.video.empty()) throw ArgumentError("give --video or --synth-seed");
  const TensorMap m = load_tensors(src.video);
  if (m.count("set.count")) {
    const auto set = decode_samples(m);
    if (src.index >= set.size()) {
      throw ArgumentError("--index " + std::to_string(src.index) + " outside a set of " + std::to_string(set.size()));
    }
    return set[src.index];
  }
  SynthSample s;
  s.video.frames = require_entry(m, "video");
  if (s.video.frames.rank() != 4 || s.video.frames.dim(1) != 3) {
    throw FormatError("entry 'video' must be [T x 3 x H x W]", 0);
  }
  return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Desk-scale video LLM lab: pooling, LoRA fusion, baselines, diagnostics", "pllab"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed (default 42)")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--config", g.config, "Run configuration JSON");
  app.add_option("--out", g.out, "Output path");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Render a synthetic sample set to PLCK");
  std::size_t gen_count = 64, gen_frames = 16, gen_px = 16;
  gen->add_option("--count", gen_count, "Number of clips")->check(CLI::PositiveNumber);
  gen->add_option("--frames", gen_frames, "Frames per clip")->check(CLI::PositiveNumber);
  gen->add_option("--frame-px", gen_px, "Frame side in pixels")->check(CLI::PositiveNumber);

  // train
  auto* tr = app.add_subcommand("train", "Train a model; writes a checkpoint and a loss CSV");
  std::string tr_log;
  std::optional<std::size_t> tr_steps;
  tr->add_option("--log", tr_log, "Loss CSV path");
  tr->add_option("--steps", tr_steps, "Override train.total_steps");

  // infer
  auto* inf = app.add_subcommand("infer", "Answer a question about one clip");
  std::string inf_ckpt, inf_prompt, inf_dump;
  ClipSource inf_src;
  std::size_t inf_max_new = kAnswerMaxNew;
  bool inf_ood = false;
  inf->add_option("--checkpoint", inf_ckpt, "Checkpoint PLCK")->required();
  inf->add_option("--video", inf_src.video, "Sample-set or clip PLCK");
  inf->add_option("--index", inf_src.index, "Clip index within a sample set");
  inf->add_option("--synth-seed", inf_src.synth_seed, "Render a synthetic clip from this seed");
  inf->add_option("--prompt", inf_prompt, "Question text (default: the clip's color question)");
  inf->add_option("--max-new", inf_max_new, "Generation limit")->check(CLI::PositiveNumber);
  inf->add_flag("--ood", inf_ood, "Use the Human/Assistant role tags");
  inf->add_option("--dump-features", inf_dump, "Write the pre-LLM feature grid to PLCK");

  // pool
  auto* pl = app.add_subcommand("pool", "Adaptive structure pooling of a stored feature grid");
  std::string pl_in;
  PoolSpec pl_spec;
  pl->add_option("--features", pl_in, "PLCK with a rank-4 'features' entry")->required();
  pl->add_option("--t-out", pl_spec.t_out, "Target frames")->required();
  pl->add_option("--w-out", pl_spec.w_out, "Target width")->required();
  pl->add_option("--h-out", pl_spec.h_out, "Target height")->required();

  // diagnose
  auto* dg = app.add_subcommand("diagnose", "Norm, neighbour-similarity and length statistics as JSON");
  std::string dg_in;
  std::size_t dg_bins = kNormBins;
  double dg_k = kDominantK;
  dg->add_option("--features", dg_in, "PLCK with a 'features' entry")->required();
  dg->add_option("--bins", dg_bins, "Norm histogram bins")->check(CLI::PositiveNumber);
  dg->add_option("--k", dg_k, "Dominance threshold multiple of the median");

  // sweep-alpha
  auto* sw = app.add_subcommand("sweep-alpha", "Evaluate a checkpoint across LoRA alphas");
  std::string sw_ckpt, sw_eval;
  std::vector<double> sw_alphas = default_alphas();
  bool sw_ood = false;
  sw->add_option("--checkpoint", sw_ckpt, "Checkpoint PLCK")->required();
  sw->add_option("--eval", sw_eval, "Sample-set PLCK")->required();
  sw->add_option("--alphas", sw_alphas, "Comma-separated alphas")->delimiter(',');
  sw->add_flag("--ood", sw_ood, "Use the Human/Assistant role tags");

  // merge
  auto* mg = app.add_subcommand("merge", "Fold LoRA factors into base weights");
  std::string mg_in;
  double mg_alpha = 0.0;
  mg->add_option("--in", mg_in, "Checkpoint PLCK")->required();
  mg->add_option("--alpha", mg_alpha, "Alpha used for the merge")->required();

  // grid-search
  auto* gs = app.add_subcommand("grid-search", "Pooling-shape grid search");
  std::string gs_plan = "desk";
  std::optional<std::size_t> gs_steps, gs_eval;
  gs->add_option("--plan", gs_plan, "desk | full | full-spatial")
      ->check(CLI::IsMember({"desk", "full", "full-spatial"}));
  gs->add_option("--steps", gs_steps, "Override train.total_steps per cell");
  gs->add_option("--eval-size", gs_eval, "Override eval.size");

  // compare-baselines
  auto* cb = app.add_subcommand("compare-baselines", "n-frame vs VCG pooling vs adaptive pooling");
  std::optional<std::size_t> cb_steps, cb_eval;
  std::vector<std::size_t> cb_spec;
  cb->add_option("--steps", cb_steps, "Training budget per variant");
  cb->add_option("--eval-size", cb_eval, "Override eval.size");
  cb->add_option("--spec", cb_spec, "Adaptive target t,w,h")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gen) {
      require_out(g);
      SynthOptions o;
      o.frames = gen_frames;
      o.grid_px = gen_px;
      save_tensors(g.out, encode_samples(gen_synth_set(g.seed, gen_count, o)));
    } else if (*tr) {
      require_out(g);
      ExperimentConfig c = base_config(g);
      if (tr_steps) c.train.total_steps = *tr_steps;
      c.train.validate();
      Model m = init_model(c.model, c.train.seed);
      const auto log = train(c.train, m, {g.out, tr_log});
      out << "trained " << log.size() << " steps, final loss " << format_number(log.back().loss) << "\n";
    } else if (*inf) {
      const Model m = load_model(inf_ckpt);
      const SynthSample clip = load_clip(inf_src, m.config.frame_px);
      std::string question = inf_prompt;
      if (question.empty()) {
        if (clip.questions.empty()) throw ArgumentError("--prompt is required for a bare clip");
        question = clip.questions[0].prompt_text();
      }
      const InferResult r = infer(m, clip.video, question, inf_ood ? PromptStyle::ood : PromptStyle::ind, inf_max_new);
      out << r.text << "\n";
      if (!g.out.empty()) write_text_file(g.out, r.text + "\n");
      if (!inf_dump.empty()) {
        TensorMap dump;
        dump.emplace("features", r.features.tensor());
        dump.emplace("generation_lengths", Tensor({1}, {static_cast<double>(r.tokens.size())}));
        save_tensors(inf_dump, dump);
      }
    } else if (*pl) {
      require_out(g);
      const TensorMap m = load_tensors(pl_in);
      const FeatureGrid grid(require_entry(m, "features"));
      TensorMap o;
      o.emplace("features", adaptive_pool(grid, pl_spec).tensor());
      save_tensors(g.out, o);
    } else if (*dg) {
      require_out(g);
      const TensorMap m = load_tensors(dg_in);
      const Tensor& f = require_entry(m, "features");
      const NormStats norms = token_norms(f, dg_bins, dg_k);
      std::optional<SimilarityStats> sim;
      if (f.rank() == 4) sim = neighbor_similarity(FeatureGrid(f));
      std::optional<LengthStats> lengths;
      if (auto it = m.find("generation_lengths"); it != m.end()) {
        std::vector<std::size_t> l;
        for (double v : it->second.values()) {
          if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
            throw FormatError("generation_lengths must hold non-negative integers", 0);
          }
          l.push_back(static_cast<std::size_t>(v));
        }
        lengths = length_stats(std::move(l));
      }
      const auto j = diagnostics_json(&norms, sim ? &*sim : nullptr, lengths ? &*lengths : nullptr);
      write_text_file(g.out, j.dump(2) + "\n");
    } else if (*sw) {
      require_out(g);
      const Model m = load_model(sw_ckpt);
      const auto eval_set = decode_samples(load_tensors(sw_eval));
      const auto report = alpha_sweep(m, eval_set, sw_alphas, sw_ood ? PromptStyle::ood : PromptStyle::ind);
      write_text_file(g.out, sweep_csv(report));
    } else if (*mg) {
      require_out(g);
      save_model(g.out, merge_model(load_model(mg_in), mg_alpha));
    } else if (*gs) {
      require_out(g);
      ExperimentConfig c = base_config(g);
      if (gs_steps) c.train.total_steps = *gs_steps;
      if (gs_eval) c.eval_size = *gs_eval;
      c.train.validate();
      const GridSearchPlan plan = gs_plan == "desk" ? desk_plan() : gs_plan == "full" ? full_plan() : full_spatial_at_desk();
      write_text_file(g.out, grid_csv(grid_search(plan, c, cache_dir_from_env())));
    } else if (*cb) {
      require_out(g);
      ExperimentConfig c = base_config(g);
      if (cb_steps) c.train.total_steps = *cb_steps;
      if (cb_eval) c.eval_size = *cb_eval;
      if (!cb_spec.empty()) c.model.pool = parse_spec(cb_spec);
      c.train.validate();
      write_text_file(g.out, baselines_csv(compare_baselines(c, cache_dir_from_env())));
    }
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace pllab
