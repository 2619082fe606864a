// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "test_support.hpp"
#include "pllab/errors.hpp"
#include "pllab/harness/config.hpp"
#include "pllab/model/model.hpp"
#include "pllab/trainer/loss.hpp"
#include "pllab/trainer/trainer.hpp"

using namespace pllab;
using pllab::test::random_tensor;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.frames = 4;
  c.frame_px = 8;
  c.vision.d_vis = 16;
  c.vision.d_model = 16;
  c.lm.d_model = 16;
  c.lm.heads = 2;
  c.lm.layers = 1;
  c.lm.max_seq = 128;
  c.pool = {2, 2, 2};
  return c;
}

TrainConfig short_run(std::size_t steps) {
  TrainConfig t;
  t.total_steps = steps;
  t.batch_size = 4;
  t.seed = 5;
  return t;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("cross_entropy examples") {
  Tensor perfect({2, 260}, -1e3);
  perfect.at(0, 7) = 1e3;
  perfect.at(1, 9) = 1e3;
  const std::vector<int> targets{7, 9};
  CHECK(cross_entropy(perfect, targets, {true, true}) == 0.0);

  const Tensor uniform({3, 260}, 0.25);
  const double l = cross_entropy(uniform, std::vector<int>{1, 2, 3}, {true, false, true});
  CHECK(std::abs(l - std::log(260.0)) < 1e-12);
  CHECK(l == doctest::Approx(5.561).epsilon(1e-3));

  CHECK_THROWS_AS(cross_entropy(uniform, std::vector<int>{1, 2, 3}, {false, false, false}), ArgumentError);
  CHECK_THROWS_AS(cross_entropy(uniform, std::vector<int>{1, 2}, {true, true}), DimensionError);
}

TEST_CASE("cross_entropy matches a direct recomputation and its gradient") {
  const Tensor logits = random_tensor({6, 11}, 4, -3.0, 3.0);
  const std::vector<int> targets{0, 5, 10, 3, 3, 7};
  const std::vector<bool> mask{true, false, true, true, false, true};
  double want = 0.0;
  for (std::size_t r = 0; r < 6; ++r) {
    if (!mask[r]) continue;
    double z = 0.0;
    for (std::size_t c = 0; c < 11; ++c) z += std::exp(logits.at(r, c));
    want += std::log(z) - logits.at(r, static_cast<std::size_t>(targets[r]));
  }
  want /= 4.0;
  Tensor d;
  CHECK(std::abs(cross_entropy(logits, targets, mask, &d) - want) < 1e-12);
  const double err = grad_check(
      [&](const Tensor& x) { return cross_entropy(x, targets, mask); }, logits, d, 1e-5);
  CHECK(err < 1e-6);
  for (std::size_t c = 0; c < 11; ++c) CHECK(d.at(1, c) == 0.0);
}

TEST_CASE("lr_at anchors") {
  TrainConfig cfg;
  cfg.total_steps = 1000;
  cfg.warmup_ratio = 0.03;
  cfg.peak_lr = 2e-4;
  CHECK(std::abs(lr_at(30, cfg) - 2e-4) < 1e-12);
  CHECK(std::abs(lr_at(515, cfg) - 1e-4) < 1e-12);
  CHECK(std::abs(lr_at(1000, cfg)) < 1e-12);
  CHECK(lr_at(0, cfg) == doctest::Approx(2e-4 / 30.0));
  CHECK(std::abs(lr_at(29, cfg) - lr_at(30, cfg)) <= 2e-4 / 30.0);
  CHECK_THROWS_AS(lr_at(1001, cfg), ArgumentError);
  double prev = lr_at(30, cfg);
  for (std::size_t s = 31; s <= 1000; ++s) {
    CHECK(lr_at(s, cfg) <= prev);
    prev = lr_at(s, cfg);
  }
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.warmup_ratio = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.total_steps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("AdamW matches a hand-computed scalar update") {
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.01;
  const double g1 = 0.5, g2 = -0.25;
  // Step 1: m = 0.05, v = 0.00025, bias-corrected m = 0.5, v = 0.25.
  double p = 1.0;
  p -= lr * (0.5 / (0.5 + eps) + wd * 1.0);
  // Step 2: m = 0.045 - 0.025 = 0.02, v = 0.00024975 + 0.0000625 = 0.00031225.
  const double m2 = 0.02 / (1 - b1 * b1);
  const double v2 = 0.00031225 / (1 - b2 * b2);
  p -= lr * (m2 / (std::sqrt(v2) + eps) + wd * p);

  AdamW opt(b1, b2, eps);
  Tensor x({1}, 1.0);
  opt.begin_step();
  opt.update("x", x, Tensor({1}, g1), lr, wd);
  opt.begin_step();
  opt.update("x", x, Tensor({1}, g2), lr, wd);
  CHECK(std::abs(x[0] - p) < 1e-12);
  CHECK(opt.steps() == 2);

  AdamW fresh(b1, b2, eps);
  CHECK_THROWS_AS(fresh.update("x", x, Tensor({1}, g1), lr, wd), ArgumentError);
}

TEST_CASE("fixed data stream covers every question once per epoch") {
  DataStream s(3, 4, SynthOptions{8, 4, 0.03});
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::set<std::pair<const SynthSample*, std::size_t>> seen;
    for (const Example& e : s.next_batch(8)) seen.insert({e.sample, e.question});
    CHECK(seen.size() == 8);
  }
  DataStream a(9, 0, SynthOptions{8, 4, 0.03}), b(9, 0, SynthOptions{8, 4, 0.03});
  for (int i = 0; i < 3; ++i) {
    const auto ea = a.next_batch(5), eb = b.next_batch(5);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(bit_equal(ea[k].sample->video.frames, eb[k].sample->video.frames));
      CHECK(ea[k].question == eb[k].question);
    }
  }
}

TEST_CASE("training is deterministic and leaves frozen tensors untouched") {
  const Model init = init_model(tiny_config(), 2);
  Model a = init, b = init;
  const auto la = train(short_run(4), a);
  const auto lb = train(short_run(4), b);
  REQUIRE(la.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(la[i].step == i);
    CHECK(la[i].loss == lb[i].loss);
    CHECK(la[i].lr == lb[i].lr);
  }
  visit_model([](const std::string& name, const Tensor& before, const Tensor& after, const Tensor& other) {
    CAPTURE(name);
    CHECK(bit_equal(after, other));
    if (param_role(name) == ParamRole::frozen) CHECK(bit_equal(before, after));
    if (name == "lm.L0.attn.q.b" || name == "proj.fc1.w" || name == "vis.embed.w") CHECK_FALSE(bit_equal(before, after));
  }, init.weights, a.weights, b.weights);

  TrainConfig frozen_enc = short_run(2);
  frozen_enc.train_encoder = false;
  Model c = init;
  train(frozen_enc, c);
  visit_vision([](const std::string&, const Tensor& x, const Tensor& y) { CHECK(bit_equal(x, y)); }, init.weights.vision,
               c.weights.vision);
}

TEST_CASE("step-0 loss of the default model sits near ln 260") {
  TrainConfig cfg;
  cfg.total_steps = 1;
  Trainer t(cfg, init_model(ModelConfig{}, cfg.seed));
  const double l0 = t.step();
  CHECK(l0 >= 5.2);
  CHECK(l0 <= 6.0);
}

TEST_CASE("non-finite loss aborts with the step index and keeps the partial log") {
  test::TempDir dir("nan");
  Model m = init_model(tiny_config(), 3);
  m.weights.projector.fc1_w[0] = std::numeric_limits<double>::quiet_NaN();
  TrainOutputs out{dir / "c.plck", dir / "loss.csv"};
  try {
    train(short_run(3), m, out);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
  CHECK(test::read_file(dir / "loss.csv") == "step,lr,loss\n");
}

TEST_CASE("checkpoint and loss log outputs") {
  test::TempDir dir("train");
  Model m = init_model(tiny_config(), 4);
  TrainConfig cfg = short_run(3);
  cfg.checkpoint_every = 1;
  const auto log = train(cfg, m, {dir / "c.plck", dir / "loss.csv"});
  const std::string csv = test::read_file(dir / "loss.csv");
  CHECK(csv.rfind("step,lr,loss\n0,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const Model back = load_model(dir / "c.plck");
  visit_model([](const std::string&, const Tensor& x, const Tensor& y) { CHECK(bit_equal(x, y)); }, m.weights,
              back.weights);
}

TEST_CASE("experiment config JSON") {
  const auto j = nlohmann::json::parse(R"({"model": {"frames": 8, "pool": [4, 1, 2], "pool_mode": "vcg"},
                                           "train": {"total_steps": 12, "peak_lr": 2e-5, "answer_only_loss": false},
                                           "eval": {"size": 5, "seed": 3}})");
  const ExperimentConfig c = experiment_config_from_json(j);
  CHECK(c.model.frames == 8);
  CHECK(c.model.pool == PoolSpec{4, 1, 2});
  CHECK(c.model.mode == PoolMode::vcg);
  CHECK(c.train.total_steps == 12);
  CHECK(c.train.peak_lr == 2e-5);
  CHECK_FALSE(c.train.answer_only_loss);
  CHECK(c.eval_size == 5);
  const ExperimentConfig back = experiment_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json::parse(R"({"train": {"total_step": 3}})")), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json::parse(R"({"train": {"total_steps": "x"}})")),
                  ConfigError);
}

}  // TEST_SUITE
