// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/lm/decoder.hpp"

#include <cmath>
#include <cstring>

#include "pllab/errors.hpp"

namespace pllab {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kHeadInitStd = 0.02;

Tensor normal_weight(std::size_t out, std::size_t in, Rng& rng, double gain = 1.0) {
  return randn({out, in}, rng, gain / std::sqrt(static_cast<double>(in)));
}

LoraLinear zero_lora(const LoraLinear& l) {
  LoraLinear z = l;
  z.w0.fill(0.0);
  if (z.has_adapter()) {
    z.a.fill(0.0);
    z.b.fill(0.0);
  }
  return z;
}

}  // namespace

void LmConfig::validate() const {
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw DimensionError("LM d_model " + std::to_string(d_model) + " not divisible by heads " +
                         std::to_string(heads));
  }
  if (vocab != static_cast<std::size_t>(kVocabSize)) {
    throw DimensionError("LM vocab must be 260 (256 bytes + 4 specials)");
  }
  if (layers == 0 || max_seq < 3) throw DimensionError("LM needs >= 1 layer and max_seq >= 3");
  if (lora_rank < 1 || lora_rank > d_model) throw ArgumentError("lora_rank must be in [1, d_model]");
  if (!(train_alpha >= 0.0)) throw ArgumentError("train_alpha must be >= 0");
}

LmWeights init_lm(const LmConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.d_model;
  const std::size_t r = cfg.lora_rank;
  const double a = cfg.train_alpha;
  const double resid = 1.0 / std::sqrt(2.0 * static_cast<double>(cfg.layers));
  LmWeights w;
  w.tok_emb = randn({cfg.vocab, d}, rng, 1.0);
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    DecoderLayerWeights L;
    L.ln1_g = Tensor({d}, 1.0);
    L.ln1_b = Tensor({d});
    L.q = make_lora(normal_weight(d, d, rng), r, a, rng);
    L.k = make_lora(normal_weight(d, d, rng), r, a, rng);
    L.v = make_lora(normal_weight(d, d, rng), r, a, rng);
    L.o = make_lora(normal_weight(d, d, rng, resid), r, a, rng);
    L.ln2_g = Tensor({d}, 1.0);
    L.ln2_b = Tensor({d});
    L.fc1 = make_lora(normal_weight(4 * d, d, rng), r, a, rng);
    L.fc2 = make_lora(normal_weight(d, 4 * d, rng, resid), r, a, rng);
    w.layers.push_back(std::move(L));
  }
  w.lnf_g = Tensor({d}, 1.0);
  w.lnf_b = Tensor({d});
  w.head = make_lora(randn({cfg.vocab, d}, rng, kHeadInitStd), r, a, rng);
  return w;
}

LmWeights zeros_like(const LmWeights& w) {
  LmWeights z = w;
  z.tok_emb.fill(0.0);
  for (auto& L : z.layers) {
    L.ln1_g.fill(0.0);
    L.ln1_b.fill(0.0);
    L.ln2_g.fill(0.0);
    L.ln2_b.fill(0.0);
  }
  z.lnf_g.fill(0.0);
  z.lnf_b.fill(0.0);
  visit_lora_layers([](LoraLinear& l) { l = zero_lora(l); }, z);
  return z;
}

void set_lm_alpha(LmWeights& w, double alpha) {
  visit_lora_layers([alpha](LoraLinear& l) { l.alpha = alpha; }, w);
}

Tensor positional_encoding(std::size_t n, std::size_t d) {
  Tensor pe({n, d});
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t i = 0; i < d; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
      pe.at(p, i) = std::sin(static_cast<double>(p) * freq);
      if (i + 1 < d) pe.at(p, i + 1) = std::cos(static_cast<double>(p) * freq);
    }
  }
  return pe;
}

EmbeddedSeq build_input_sequence(const Tensor& visual, const TokenSeq& prompt, const LmWeights& w,
                                 const LmConfig& cfg) {
  const std::size_t d = cfg.d_model;
  if (visual.rank() != 2 || visual.cols() != d) {
    throw DimensionError("visual tokens " + shape_str(visual.shape()) + " do not have width d_model=" +
                         std::to_string(d));
  }
  const std::size_t n = 2 + visual.rows() + prompt.size();
  if (n > cfg.max_seq) {
    throw CapacityError("input sequence of " + std::to_string(n) + " tokens exceeds max_seq " +
                        std::to_string(cfg.max_seq));
  }
  EmbeddedSeq seq;
  seq.visual_begin = 2;
  seq.visual_count = visual.rows();
  seq.ids.reserve(n);
  seq.ids.push_back(kBos);
  seq.ids.push_back(kVid);
  seq.ids.insert(seq.ids.end(), visual.rows(), -1);
  seq.ids.insert(seq.ids.end(), prompt.begin(), prompt.end());

  seq.embeddings = positional_encoding(n, d);
  for (std::size_t p = 0; p < n; ++p) {
    auto dst = seq.embeddings.row(p);
    std::span<const double> src;
    if (seq.ids[p] < 0) {
      src = visual.row(p - seq.visual_begin);
    } else {
      if (seq.ids[p] >= static_cast<int>(cfg.vocab)) throw ArgumentError("token id out of vocabulary");
      src = w.tok_emb.row(static_cast<std::size_t>(seq.ids[p]));
    }
    for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
  }
  return seq;
}

Tensor decoder_hidden(const Tensor& embeddings, const LmWeights& w, const LmConfig& cfg,
                      DecoderCache* cache) {
  const std::size_t n = embeddings.rows();
  if (n > cfg.max_seq) {
    throw CapacityError("sequence of " + std::to_string(n) + " tokens exceeds max_seq " +
                        std::to_string(cfg.max_seq));
  }
  if (embeddings.cols() != cfg.d_model) throw DimensionError("decoder input width mismatch");
  Tensor x = embeddings;
  if (cache) cache->layers.clear();
  for (const auto& L : w.layers) {
    DecoderLayerCache lc;
    DecoderLayerCache* c = cache ? &lc : nullptr;
    Tensor h1 = num::layer_norm(x, L.ln1_g, L.ln1_b, kLnEps, c ? &lc.ln1 : nullptr);
    Tensor q = lora_forward(L.q, h1, c ? &lc.q : nullptr);
    Tensor k = lora_forward(L.k, h1, c ? &lc.k : nullptr);
    Tensor v = lora_forward(L.v, h1, c ? &lc.v : nullptr);
    Tensor att = num::attention(q, k, v, cfg.heads, n, /*causal=*/true, c ? &lc.attn : nullptr);
    num::add_into(x, lora_forward(L.o, att, c ? &lc.o : nullptr));
    Tensor h2 = num::layer_norm(x, L.ln2_g, L.ln2_b, kLnEps, c ? &lc.ln2 : nullptr);
    Tensor pre = lora_forward(L.fc1, h2, c ? &lc.fc1 : nullptr);
    num::add_into(x, lora_forward(L.fc2, num::gelu(pre), c ? &lc.fc2 : nullptr));
    if (cache) {
      lc.pre = std::move(pre);
      cache->layers.push_back(std::move(lc));
    }
  }
  return num::layer_norm(x, w.lnf_g, w.lnf_b, kLnEps, cache ? &cache->lnf : nullptr);
}

Tensor decoder_hidden_backward(const DecoderCache& cache, const LmWeights& w, const LmConfig& cfg,
                               const Tensor& dhidden, LmWeights& grads) {
  (void)cfg;
  Tensor dx = num::layer_norm_backward(cache.lnf, w.lnf_g, dhidden).dx;
  for (std::size_t li = w.layers.size(); li-- > 0;) {
    const auto& L = w.layers[li];
    const auto& lc = cache.layers[li];
    auto& G = grads.layers[li];

    Tensor dact = lora_backward(L.fc2, lc.fc2, dx, G.fc2);
    Tensor dh2 = lora_backward(L.fc1, lc.fc1, num::gelu_backward(lc.pre, dact), G.fc1);
    num::add_into(dx, num::layer_norm_backward(lc.ln2, L.ln2_g, dh2).dx);

    Tensor datt = lora_backward(L.o, lc.o, dx, G.o);
    auto ga = num::attention_backward(lc.attn, datt);
    Tensor dh1 = lora_backward(L.q, lc.q, ga.dq, G.q);
    num::add_into(dh1, lora_backward(L.k, lc.k, ga.dk, G.k));
    num::add_into(dh1, lora_backward(L.v, lc.v, ga.dv, G.v));
    num::add_into(dx, num::layer_norm_backward(lc.ln1, L.ln1_g, dh1).dx);
  }
  return dx;
}

Tensor decoder_forward(const EmbeddedSeq& seq, const LmWeights& w, const LmConfig& cfg) {
  return lora_forward(w.head, decoder_hidden(seq.embeddings, w, cfg));
}

int argmax_lowest(std::span<const double> row) {
  int best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

TokenSeq greedy_generate(const LmWeights& w, const LmConfig& cfg, const Tensor& visual,
                         const TokenSeq& prompt, std::size_t max_new) {
  if (max_new < 1) throw ArgumentError("greedy_generate: max_new must be >= 1");
  TokenSeq context = prompt;
  TokenSeq out;
  for (std::size_t step = 0; step < max_new; ++step) {
    // A full context ends generation; only the initial prompt may overflow (and throws).
    if (step > 0 && 2 + visual.rows() + context.size() > cfg.max_seq) break;
    EmbeddedSeq seq = build_input_sequence(visual, context, w, cfg);
    Tensor hidden = decoder_hidden(seq.embeddings, w, cfg);
    Tensor last({1, cfg.d_model});
    std::memcpy(last.data(), hidden.row(hidden.rows() - 1).data(), cfg.d_model * sizeof(double));
    Tensor logits = lora_forward(w.head, last);
    const int next = argmax_lowest(logits.row(0));
    if (next == kEos) break;
    out.push_back(next);
    context.push_back(next);
  }
  return out;
}

}  // namespace pllab
