// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pllab/lm/lora.hpp"
#include "pllab/lm/tokenizer.hpp"
#include "pllab/numerics/attention.hpp"
#include "pllab/numerics/ops.hpp"

namespace pllab {

struct LmConfig {
  std::size_t d_model = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t vocab = kVocabSize;
  std::size_t max_seq = 512;
  std::size_t lora_rank = 4;
  double train_alpha = 32.0;

  void validate() const;
};

struct DecoderLayerWeights {
  Tensor ln1_g, ln1_b;
  LoraLinear q, k, v, o;
  Tensor ln2_g, ln2_b;
  LoraLinear fc1, fc2;  // d -> 4d -> d
};

/// Decoder-only LM. Every projection, including the vocabulary head, is a LoraLinear.
struct LmWeights {
  Tensor tok_emb;  // [vocab x d_model], frozen
  std::vector<DecoderLayerWeights> layers;
  Tensor lnf_g, lnf_b;
  LoraLinear head;  // [vocab x d_model]
};

LmWeights init_lm(const LmConfig& cfg, Rng& rng);
LmWeights zeros_like(const LmWeights& w);
/// Sets alpha on every LoraLinear.
void set_lm_alpha(LmWeights& w, double alpha);

template <class F, class... L>
void visit_lora(F&& f, const std::string& prefix, L&... ls) {
  f(prefix + ".w0", ls.w0...);
  f(prefix + ".a", ls.a...);
  f(prefix + ".b", ls.b...);
}

// Tensor visitor; LoRA factor names end in ".a" / ".b", base weights in ".w0".
template <class F, class... W>
void visit_lm(F&& f, W&... ws) {
  f(std::string("lm.tok_emb"), ws.tok_emb...);
  const std::size_t n = (ws.layers.size(), ...);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string p = "lm.L" + std::to_string(i) + ".";
    f(p + "ln1.g", ws.layers[i].ln1_g...);
    f(p + "ln1.b", ws.layers[i].ln1_b...);
    visit_lora(f, p + "attn.q", ws.layers[i].q...);
    visit_lora(f, p + "attn.k", ws.layers[i].k...);
    visit_lora(f, p + "attn.v", ws.layers[i].v...);
    visit_lora(f, p + "attn.o", ws.layers[i].o...);
    f(p + "ln2.g", ws.layers[i].ln2_g...);
    f(p + "ln2.b", ws.layers[i].ln2_b...);
    visit_lora(f, p + "mlp.fc1", ws.layers[i].fc1...);
    visit_lora(f, p + "mlp.fc2", ws.layers[i].fc2...);
  }
  f(std::string("lm.lnf.g"), ws.lnf_g...);
  f(std::string("lm.lnf.b"), ws.lnf_b...);
  visit_lora(f, std::string("lm.head"), ws.head...);
}

template <class F, class... W>
void visit_lora_layers(F&& f, W&... ws) {
  const std::size_t n = (ws.layers.size(), ...);
  for (std::size_t i = 0; i < n; ++i) {
    f(ws.layers[i].q...);
    f(ws.layers[i].k...);
    f(ws.layers[i].v...);
    f(ws.layers[i].o...);
    f(ws.layers[i].fc1...);
    f(ws.layers[i].fc2...);
  }
  f(ws.head...);
}

/// Fixed sinusoidal position table [n x d].
Tensor positional_encoding(std::size_t n, std::size_t d);

/// Embedded LM input: [BOS, VID, visual..., prompt...] plus positions 0..n-1.
struct EmbeddedSeq {
  Tensor embeddings;  // [n x d_model]
  TokenSeq ids;       // -1 at visual positions
  std::size_t visual_begin = 2;
  std::size_t visual_count = 0;

  std::size_t size() const { return ids.size(); }
};

/// Throws CapacityError when 2 + visual + prompt exceeds max_seq.
EmbeddedSeq build_input_sequence(const Tensor& visual, const TokenSeq& prompt, const LmWeights& w,
                                 const LmConfig& cfg);

struct DecoderLayerCache {
  num::LayerNormCache ln1;
  LoraCache q, k, v, o;
  num::AttentionCache attn;
  num::LayerNormCache ln2;
  LoraCache fc1, fc2;
  Tensor pre;
};

struct DecoderCache {
  std::vector<DecoderLayerCache> layers;
  num::LayerNormCache lnf;
};

/// Final layer-normed hidden states [n x d] under causal attention.
Tensor decoder_hidden(const Tensor& embeddings, const LmWeights& w, const LmConfig& cfg,
                      DecoderCache* cache = nullptr);
/// Accumulates LoRA-factor gradients into `grads`; returns d(loss)/d(embeddings).
Tensor decoder_hidden_backward(const DecoderCache& cache, const LmWeights& w, const LmConfig& cfg,
                               const Tensor& dhidden, LmWeights& grads);

/// Logits [n x vocab] at every position.
Tensor decoder_forward(const EmbeddedSeq& seq, const LmWeights& w, const LmConfig& cfg);

/// Index of the largest value; ties go to the lowest index.
int argmax_lowest(std::span<const double> row);

/// Greedy decoding after [BOS, VID, visual, prompt]; stops at EOS (not included) or max_new.
TokenSeq greedy_generate(const LmWeights& w, const LmConfig& cfg, const Tensor& visual,
                         const TokenSeq& prompt, std::size_t max_new);

}  // namespace pllab
