// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "test_support.hpp"
#include "pllab/diagnostics/diagnostics.hpp"
#include "pllab/harness/cli.hpp"
#include "pllab/harness/experiments.hpp"
#include "pllab/postopt/postopt.hpp"
#include "pllab/trainer/trainer.hpp"
#include "pllab/video_io/plck.hpp"

using namespace pllab;
namespace fs = std::filesystem;

namespace {

constexpr double kPoolTol = 1e-12;
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kOverfitLoss = 0.1;
constexpr std::size_t kOverfitSteps = 2000;
constexpr double kStep0Lo = 5.2, kStep0Hi = 6.0;
constexpr std::size_t kTemporalSteps = 5000;
constexpr std::size_t kTemporalEval = 200;
constexpr double kChance = 0.25, kChanceBand = 0.15;
constexpr double kSpatialRetain = 0.8, kTemporalFloor = 0.7;
constexpr double kSimTol = 1e-12;
constexpr double kScheduleTol = 1e-12;
constexpr std::size_t kFuzzCases = 500;
constexpr std::size_t kReportSteps = 400;
constexpr std::size_t kReportEval = 64;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pllab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// 1 ----------------------------------------------------------------------

Outcome pooling_oracle() {
  std::size_t specs = 0, identity_fail = 0;
  double worst = 0.0;
  std::uint64_t seed = 1;
  for (std::size_t T = 1; T <= 6; ++T)
    for (std::size_t W = 1; W <= 6; ++W)
      for (std::size_t H = 1; H <= 6; ++H) {
        const Tensor x = test::random_tensor({T, W, H, 3}, seed++);
        const FeatureGrid g(x);
        for (std::size_t t = 1; t <= T; ++t)
          for (std::size_t w = 1; w <= W; ++w)
            for (std::size_t h = 1; h <= H; ++h) {
              const PoolSpec s{t, w, h};
              const Tensor y = adaptive_pool(g, s).tensor();
              const Tensor want = test::oracle_pool(x, s);
              worst = std::max(worst, y.shape() == want.shape() ? max_abs_diff(y, want) : INFINITY);
              if (t == T && w == W && h == H && !bit_equal(y, x)) ++identity_fail;
              ++specs;
            }
      }
  return {worst <= kPoolTol && identity_fail == 0,
          fmt("%zu specs, max |diff| %.3g (tol %.0e), identity mismatches %zu", specs, worst, kPoolTol, identity_fail)};
}

// 2 ----------------------------------------------------------------------

Outcome fusion_identities() {
  Model m = init_model(ModelConfig{}, 11);
  std::uint64_t s = 500;
  visit_lora_layers([&](LoraLinear& l) { l.b = test::random_tensor(l.b.shape(), ++s, -0.3, 0.3); }, m.weights.lm);
  Model base = m;
  visit_lora_layers([](LoraLinear& l) {
    l.a = Tensor();
    l.b = Tensor();
  }, base.weights.lm);
  const auto clips = gen_synth_set(3, 4, synth_options_for(m.config));
  constexpr std::size_t kMaxNew = 12;
  std::size_t compared = 0, mismatches = 0;
  std::vector<Tensor> visual;
  for (const auto& c : clips) visual.push_back(visual_tokens_for(m, c.video));
  auto gen = [&](const Model& model, const Tensor& v, const std::string& q) {
    return greedy_generate(model.weights.lm, model.config.lm, v, tokenize(format_prompt(q, PromptStyle::ind)), kMaxNew);
  };
  Model zero = m;
  set_alpha(zero, 0.0);
  for (std::size_t i = 0; i < clips.size(); ++i)
    for (const auto& q : clips[i].questions) {
      mismatches += gen(zero, visual[i], q.prompt_text()) != gen(base, visual[i], q.prompt_text());
      ++compared;
    }
  for (double alpha : default_alphas()) {
    Model view = m;
    set_alpha(view, alpha);
    const Model merged = merge_model(m, alpha);
    for (std::size_t i = 0; i < clips.size(); ++i)
      for (const auto& q : clips[i].questions) {
        mismatches += gen(view, visual[i], q.prompt_text()) != gen(merged, visual[i], q.prompt_text());
        ++compared;
      }
  }
  return {mismatches == 0, fmt("%zu generations compared (alpha 0 vs base, merged vs factored at 0..32 step 4), "
                               "%zu mismatches", compared, mismatches)};
}

// 3 ----------------------------------------------------------------------

Outcome gradient_check() {
  double worst = 0.0;
  std::string worst_name;
  std::size_t tensors = 0;
  for (PoolMode mode : {PoolMode::adaptive, PoolMode::n_frame, PoolMode::vcg}) {
    ModelConfig cfg;
    cfg.frames = 4;
    cfg.frame_px = 8;
    cfg.vision.d_vis = 8;
    cfg.vision.d_model = 8;
    cfg.lm.d_model = 8;
    cfg.lm.heads = 2;
    cfg.lm.max_seq = 128;
    cfg.mode = mode;
    cfg.pool = {2, 2, 1};
    Model m = init_model(cfg, 21);
    std::uint64_t s = 900;
    visit_lora_layers([&](LoraLinear& l) { l.b = test::random_tensor(l.b.shape(), ++s, -0.2, 0.2); }, m.weights.lm);
    const auto clips = gen_synth_set(22, 2, synth_options_for(cfg));
    std::vector<TrainItem> batch;
    for (const auto& c : clips) {
      TrainItem item;
      item.video = &c.video;
      for (const auto& q : c.questions) {
        std::size_t begin = 0;
        TokenSeq text = training_text(q, PromptStyle::ind, &begin);
        const std::size_t keep = text.size() - begin + 4;
        text.erase(text.begin(), text.end() - static_cast<std::ptrdiff_t>(keep));
        item.texts.push_back(text);
        item.targets_from.push_back(4);
      }
      batch.push_back(item);
    }
    ModelWeights grads = zeros_like(m.weights);
    batch_loss(m, batch, &grads);
    const auto reports = test::check_tensor_grads(
        [](auto f, auto& a, auto& b) { visit_model(f, a, b); }, m.weights, grads,
        [&] { return batch_loss(m, batch, nullptr); },
        [](const std::string& name) { return param_role(name) == ParamRole::frozen; }, kGradStep, 32);
    for (const auto& r : reports) {
      ++tensors;
      if (r.max_rel_error >= worst) {
        worst = r.max_rel_error;
        worst_name = to_string(mode) + ":" + r.name;
      }
    }
  }
  return {worst < kGradTol, fmt("%zu trainable tensors over 3 pooling modes, max rel error %.3g at %s (tol %.0e, h %.0e)",
                                tensors, worst, worst_name.c_str(), kGradTol, kGradStep)};
}

// 4 ----------------------------------------------------------------------

Outcome overfit() {
  TrainConfig cfg;
  cfg.dataset_size = 8;
  cfg.total_steps = kOverfitSteps;
  cfg.seed = 42;
  Trainer t(cfg, init_model(ModelConfig{}, cfg.seed));
  const double step0 = t.step();
  double best = INFINITY;
  std::size_t reached = 0;
  while (!t.done()) {
    t.step();
    if (t.steps_done() % 50 == 0) {
      best = std::min(best, t.dataset_loss());
      if (best < kOverfitLoss) {
        reached = t.steps_done();
        break;
      }
    }
  }
  const bool ok0 = step0 >= kStep0Lo && step0 <= kStep0Hi;
  return {ok0 && reached > 0,
          fmt("step-0 loss %.4f (want [%.1f, %.1f], ln 260 = %.4f); full-set loss %.4f %s %zu steps (want < %.1f "
              "within %zu)",
              step0, kStep0Lo, kStep0Hi, std::log(260.0), best, reached ? "after" : "still above at",
              reached ? reached : t.steps_done(), kOverfitLoss, kOverfitSteps)};
}

// 5 ----------------------------------------------------------------------

TrainConfig temporal_train_config() {
  TrainConfig t;
  t.total_steps = kTemporalSteps;
  t.seed = 42;
  return t;
}

// Pools the projected grid to t'=1 and repeats it over every temporal slot: the
// LM sees the information of one pooled frame at its trained prefix layout.
Tensor collapsed_tokens(const Model& model, const Video& video) {
  const PoolSpec& p = model.config.pool;
  const FeatureGrid one = adaptive_pool(projected_grid(model, video), {1, p.w_out, p.h_out});
  const std::size_t n = one.tokens(), d = one.channels();
  Tensor out({p.t_out * n, d});
  for (std::size_t t = 0; t < p.t_out; ++t)
    for (std::size_t k = 0; k < n * d; ++k) out[t * n * d + k] = one.tensor()[k];
  return out;
}

Outcome temporal_pooling(const std::optional<fs::path>& cache) {
  const ModelConfig mc;  // 16 frames, adaptive (16, 2, 2)
  const Model full = train_cached(mc, temporal_train_config(), cache);
  const auto eval_set = gen_synth_set(7, kTemporalEval, synth_options_for(mc));
  const EvalResult r16 = evaluate(full, eval_set, PromptStyle::ind);
  std::vector<Tensor> visual;
  for (const auto& s : eval_set) visual.push_back(collapsed_tokens(full, s.video));
  const EvalResult r1 = evaluate(full, eval_set, visual, PromptStyle::ind);
  // Shortened prefix (4 tokens), reported only: positions of the prompt move.
  Model shortened = full;
  shortened.config.pool = {1, mc.pool.w_out, mc.pool.h_out};
  const EvalResult rs = evaluate(shortened, eval_set, PromptStyle::ind);
  const bool near_chance = std::abs(r1.temporal_acc - kChance) <= kChanceBand;
  const bool spatial_kept = r1.spatial_acc >= kSpatialRetain * r16.spatial_acc;
  const bool temporal_kept = r16.temporal_acc >= kTemporalFloor;
  return {near_chance && spatial_kept && temporal_kept,
          fmt("t'=16: spatial %.3f temporal %.3f (want temporal >= %.2f); collapsed t'=1: spatial %.3f (want >= "
              "%.3f) temporal %.3f (want %.2f +- %.2f); shortened 4-token prefix: spatial %.3f temporal %.3f; "
              "%zu eval clips, %zu steps",
              r16.spatial_acc, r16.temporal_acc, kTemporalFloor, r1.spatial_acc, kSpatialRetain * r16.spatial_acc,
              r1.temporal_acc, kChance, kChanceBand, rs.spatial_acc, rs.temporal_acc, kTemporalEval,
              kTemporalSteps)};
}

// 6 ----------------------------------------------------------------------

Outcome diagnostics_check() {
  std::size_t grids = 0, injections = 0, detector_errors = 0, count_errors = 0, skipped = 0;
  double worst = 0.0;
  Rng rng(66);
  for (std::size_t T = 1; T <= 4; ++T)
    for (std::size_t W = 1; W <= 4; ++W)
      for (std::size_t H = 1; H <= 4; ++H) {
        ++grids;
        const std::size_t n = T * W * H;
        const FeatureGrid g(test::random_tensor({T, W, H, 3}, 1000 + grids));
        const SimilarityStats s = neighbor_similarity(g);
        const test::PairOracle o = test::oracle_pairs(g);
        if (s.spatial.size() != T * (W * (H - 1) + (W - 1) * H) || s.temporal.size() != (T - 1) * W * H ||
            s.spatial.size() != o.spatial.size() || s.temporal.size() != o.temporal.size() ||
            s.mean_spatial.has_value() != !o.spatial.empty() || s.mean_temporal.has_value() != !o.temporal.empty()) {
          ++count_errors;
        }
        if (s.mean_spatial) worst = std::max(worst, std::abs(*s.mean_spatial - o.sum_spatial / o.spatial.size()));
        if (s.mean_temporal) worst = std::max(worst, std::abs(*s.mean_temporal - o.sum_temporal / o.temporal.size()));

        // With fewer than three tokens the median is pulled up by the outlier itself.
        if (n < 3) {
          ++skipped;
          continue;
        }
        for (double factor : {10.0, 100.0}) {
          for (std::size_t pos = 0; pos < n; ++pos) {
            const NormStats st = token_norms(test::outlier_grid(T, W, H, 4, rng, pos, factor));
            detector_errors += st.dominant_indices != std::vector<std::size_t>{pos};
            ++injections;
          }
          detector_errors += token_norms(test::outlier_grid(T, W, H, 4, rng, n, factor)).dominant_count != 0;
        }
      }
  return {detector_errors == 0 && count_errors == 0 && worst <= kSimTol,
          fmt("%zu grids; %zu outlier injections at 10x/100x, %zu detector errors (%zu grids under 3 tokens "
              "excluded); pair-count errors %zu; max |mean - oracle| %.3g (tol %.0e)",
              grids, injections, detector_errors, skipped, count_errors, worst, kSimTol)};
}

// 7 ----------------------------------------------------------------------

Outcome downsampling() {
  const double r = downsample_rate(64, 4);
  return {r == 0.0625, fmt("downsample_rate(64, 4) = %.17g (want 0.0625 exactly)", r)};
}

// 8 ----------------------------------------------------------------------

Outcome schedule() {
  TrainConfig cfg;
  cfg.total_steps = 1000;
  cfg.warmup_ratio = 0.03;
  const double p = cfg.peak_lr;
  const double a = lr_at(30, cfg), b = lr_at(515, cfg), c = lr_at(1000, cfg);
  const double err = std::max({std::abs(a - p), std::abs(b - p / 2), std::abs(c)});
  return {err <= kScheduleTol, fmt("lr(30) = %.17g, lr(515) = %.17g, lr(1000) = %.3g (peak %.3g); max err %.3g (tol %.0e)",
                                   a, b, c, p, err, kScheduleTol)};
}

// 9 ----------------------------------------------------------------------

Outcome determinism() {
  test::TempDir dir("accept9");
  auto path = [&](const std::string& n) { return (dir / n).string(); };
  test::write_file(dir / "cfg.json", R"({"model": {"frames": 4, "frame_px": 8, "pool": [2, 2, 2]},
                                         "train": {"total_steps": 3, "batch_size": 2}, "eval": {"size": 2}})");
  const std::string cfg = path("cfg.json");
  // Each command runs twice, writing to run-suffixed outputs; inputs come from run 0.
  std::vector<std::pair<std::string, std::function<std::vector<std::string>(const std::string&)>>> cmds = {
      {"gen-data", [&](const std::string& r) {
         return std::vector<std::string>{"--seed", "5", "--out", path("set" + r), "gen-data", "--count", "4",
                                         "--frames", "8", "--frame-px", "8"};
       }},
      {"train", [&](const std::string& r) {
         return std::vector<std::string>{"--seed", "5", "--config", cfg, "--out", path("ckpt" + r), "train",
                                         "--log", path("loss" + r)};
       }},
      {"infer", [&](const std::string& r) {
         return std::vector<std::string>{"--out", path("answer" + r), "infer", "--checkpoint", path("ckpt0"), "--video",
                                         path("set0"), "--index", "1", "--dump-features", path("feat" + r)};
       }},
      {"pool", [&](const std::string& r) {
         return std::vector<std::string>{"--out", path("pooled" + r), "pool", "--features", path("feat0"), "--t-out",
                                         "1", "--w-out", "2", "--h-out", "1"};
       }},
      {"diagnose", [&](const std::string& r) {
         return std::vector<std::string>{"--out", path("diag" + r), "diagnose", "--features", path("feat0")};
       }},
      {"sweep-alpha", [&](const std::string& r) {
         return std::vector<std::string>{"--out", path("sweep" + r), "sweep-alpha", "--checkpoint", path("ckpt0"),
                                         "--eval", path("set0")};
       }},
      {"merge", [&](const std::string& r) {
         return std::vector<std::string>{"--out", path("merged" + r), "merge", "--in", path("ckpt0"), "--alpha", "8"};
       }},
      {"grid-search", [&](const std::string& r) {
         return std::vector<std::string>{"--seed", "5", "--out", path("grid" + r), "grid-search", "--steps", "2",
                                         "--eval-size", "2"};
       }},
      {"compare-baselines", [&](const std::string& r) {
         return std::vector<std::string>{"--seed", "5", "--config", cfg, "--out", path("base" + r),
                                         "compare-baselines"};
       }},
  };
  const std::vector<std::vector<std::string>> outputs = {
      {"set"}, {"ckpt", "loss"}, {"answer", "feat"}, {"pooled"}, {"diag"}, {"sweep"}, {"merged"}, {"grid"}, {"base"}};
  ::unsetenv("PLLAB_CACHE_DIR");
  std::size_t differing = 0, failed = 0;
  std::string notes;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    for (const char* r : {"0", "1"}) {
      const CliRun run = cli(cmds[i].second(r));
      if (run.code != 0) {
        ++failed;
        notes += " " + cmds[i].first + " exit " + std::to_string(run.code) + ":" + run.err;
      }
    }
    for (const auto& o : outputs[i]) {
      const std::string a = test::read_file(path(o + "0")), b = test::read_file(path(o + "1"));
      if (a.empty() || a != b) {
        ++differing;
        notes += " " + o + " differs";
      }
    }
  }

  Rng rng(9009);
  std::size_t fuzz_fail = 0;
  for (std::size_t c = 0; c < kFuzzCases; ++c) {
    TensorMap m;
    const std::size_t entries = rng.below(6);
    for (std::size_t e = 0; e < entries; ++e) {
      std::string name;
      for (std::size_t n = 1 + rng.below(24); name.size() < n;) {
        name += rng.below(8) == 0 ? std::string("\xc3\xa9") : std::string(1, static_cast<char>(32 + rng.below(95)));
      }
      Shape shape(1 + rng.below(4));
      for (auto& d : shape) d = 1 + rng.below(5);
      Tensor t(shape);
      for (auto& v : t.values()) {
        const std::uint64_t bits = rng.next();
        std::memcpy(&v, &bits, sizeof v);
      }
      m[name] = t;
    }
    const std::string bytes = encode_plck(m);
    const TensorMap back = decode_plck(bytes);
    bool ok = back.size() == m.size() && encode_plck(back) == bytes;
    for (const auto& [k, v] : m) ok = ok && back.count(k) && bit_equal(back.at(k), v);
    if (c % 50 == 0) {
      save_tensors(dir / "fuzz.plck", m);
      ok = ok && test::read_file(dir / "fuzz.plck") == bytes;
    }
    fuzz_fail += !ok;
  }
  return {differing == 0 && failed == 0 && fuzz_fail == 0,
          fmt("9 subcommands run twice: %zu failed runs, %zu differing outputs; PLCK fuzz %zu cases, %zu failures%s",
              failed, differing, kFuzzCases, fuzz_fail, notes.substr(0, 300).c_str())};
}

// 10 ---------------------------------------------------------------------

std::size_t count_empty_cells(const std::string& csv, std::size_t* rows, std::size_t* ragged) {
  std::istringstream in(csv);
  std::string line;
  std::size_t empty = 0, cols = 0;
  *rows = 0;
  *ragged = 0;
  bool header = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (header) {
      cols = cells.size();
      header = false;
      continue;
    }
    ++*rows;
    if (cells.size() != cols) ++*ragged;
    for (const auto& c : cells) empty += c.empty() || c == "nan";
  }
  return empty;
}

Outcome reports(const std::optional<fs::path>& cache) {
  test::TempDir dir("accept10");
  if (cache) ::setenv("PLLAB_CACHE_DIR", cache->c_str(), 1);
  const std::string steps = std::to_string(kReportSteps), eval = std::to_string(kReportEval);
  const CliRun g = cli({"--out", (dir / "grid.csv").string(), "grid-search", "--plan", "desk", "--steps", steps,
                        "--eval-size", eval});
  const CliRun b = cli({"--out", (dir / "base.csv").string(), "compare-baselines", "--steps", steps, "--eval-size", eval});
  const std::string grid = test::read_file(dir / "grid.csv"), base = test::read_file(dir / "base.csv");
  std::size_t grows = 0, gragged = 0, brows = 0, bragged = 0;
  const std::size_t gempty = count_empty_cells(grid, &grows, &gragged);
  const std::size_t bempty = count_empty_cells(base, &brows, &bragged);
  const bool gheader = grid.rfind("config_id,frames_in,t_out,w_out,h_out,downsample_rate,spatial_acc,temporal_acc,"
                                  "mean_gen_len,max_over_median,status\n", 0) == 0;
  const bool bheader = base.rfind("variant,prompt,visual_tokens,downsample_rate,spatial_acc,temporal_acc,mean_gen_len,"
                                  "max_over_median\n", 0) == 0;
  const bool gok = grid.find(",error") == std::string::npos;
  return {g.code == 0 && b.code == 0 && gheader && bheader && gok && grows == desk_plan().cells().size() &&
              brows == 6 && gempty + bempty + gragged + bragged == 0,
          fmt("grid-search: exit %d, %zu rows (want %zu), empty/nan cells %zu, ragged %zu, header %s; "
              "compare-baselines: exit %d, %zu rows (want 6), empty/nan cells %zu, ragged %zu, header %s; "
              "%zu steps per cell, %zu eval clips",
              g.code, grows, desk_plan().cells().size(), gempty, gragged, gheader ? "ok" : "bad", b.code, brows, bempty,
              bragged, bheader ? "ok" : "bad", kReportSteps, kReportEval)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pllab acceptance suite"};
  int only = 0;
  std::string cache;
  app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  app.add_option("--cache", cache, "Checkpoint cache shared by criteria 5 and 10");
  CLI11_PARSE(app, argc, argv);
  const std::optional<fs::path> cache_dir = cache.empty() ? std::nullopt : std::optional<fs::path>(cache);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"pooling oracle equivalence", pooling_oracle},
      {"LoRA fusion identities", fusion_identities},
      {"gradient correctness", gradient_check},
      {"overfit contract", overfit},
      {"temporal pooling harms temporal questions", [&] { return temporal_pooling(cache_dir); }},
      {"diagnostics correctness", diagnostics_check},
      {"downsampling-rate bookkeeping", downsampling},
      {"schedule anchors", schedule},
      {"determinism and formats", determinism},
      {"report completeness", [&] { return reports(cache_dir); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
