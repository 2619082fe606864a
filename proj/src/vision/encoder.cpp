// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/vision/encoder.hpp"

#include <cmath>
#include <cstring>

#include "pllab/errors.hpp"

namespace pllab {

void VisionConfig::validate(std::size_t frame_px) const {
  if (patch_px == 0 || frame_px == 0 || frame_px % patch_px != 0) {
    throw DimensionError("frame of " + std::to_string(frame_px) + " px does not tile into " +
                         std::to_string(patch_px) + " px patches");
  }
  if (heads == 0 || d_vis % heads != 0 || d_model % heads != 0) {
    throw DimensionError("d_vis " + std::to_string(d_vis) + " / d_model " + std::to_string(d_model) +
                         " not divisible by heads " + std::to_string(heads));
  }
  if (encoder_layers == 0) throw DimensionError("encoder_layers must be >= 1");
}

Tensor patchify(const Tensor& frame, std::size_t patch_px) {
  if (frame.rank() != 3) throw DimensionError("patchify expects [C x H x W], got " + shape_str(frame.shape()));
  const std::size_t C = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  if (patch_px == 0 || H % patch_px != 0 || W % patch_px != 0) {
    throw DimensionError("patchify: frame " + shape_str(frame.shape()) + " not divisible by patch " +
                         std::to_string(patch_px));
  }
  const std::size_t ph = H / patch_px, pw = W / patch_px;
  Tensor out({ph * pw, C * patch_px * patch_px});
  for (std::size_t pr = 0; pr < ph; ++pr) {
    for (std::size_t pc = 0; pc < pw; ++pc) {
      auto dst = out.row(pr * pw + pc);
      std::size_t k = 0;
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t y = 0; y < patch_px; ++y) {
          for (std::size_t x = 0; x < patch_px; ++x) {
            dst[k++] = frame[(c * H + pr * patch_px + y) * W + pc * patch_px + x];
          }
        }
      }
    }
  }
  return out;
}

namespace {

Tensor init_linear(std::size_t out, std::size_t in, Rng& rng, double gain = 1.0) {
  return randn({out, in}, rng, gain / std::sqrt(static_cast<double>(in)));
}

// Splits [n x 3d] into three [n x d] column blocks.
std::array<Tensor, 3> split3(const Tensor& x) {
  const std::size_t d = x.cols() / 3;
  std::array<Tensor, 3> parts{Tensor({x.rows(), d}), Tensor({x.rows(), d}), Tensor({x.rows(), d})};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t p = 0; p < 3; ++p) {
      std::memcpy(parts[p].data() + r * d, x.data() + r * 3 * d + p * d, d * sizeof(double));
    }
  }
  return parts;
}

Tensor join3(const Tensor& a, const Tensor& b, const Tensor& c) {
  const std::size_t d = a.cols();
  Tensor out({a.rows(), 3 * d});
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::memcpy(out.data() + r * 3 * d, a.data() + r * d, d * sizeof(double));
    std::memcpy(out.data() + r * 3 * d + d, b.data() + r * d, d * sizeof(double));
    std::memcpy(out.data() + r * 3 * d + 2 * d, c.data() + r * d, d * sizeof(double));
  }
  return out;
}

void check_shape(const Tensor& t, const Shape& want, const char* name) {
  if (t.shape() != want) {
    throw DimensionError(std::string("vision weight ") + name + " has shape " + shape_str(t.shape()) +
                         ", expected " + shape_str(want));
  }
}

void check_weights(const VisionConfig& cfg, const VisionWeights& w, std::size_t tokens) {
  const std::size_t d = cfg.d_vis;
  check_shape(w.embed_w, {d, cfg.patch_dim()}, "embed.w");
  check_shape(w.embed_b, {d}, "embed.b");
  check_shape(w.pos, {tokens, d}, "pos");
  if (w.layers.size() != cfg.encoder_layers) throw DimensionError("vision layer count mismatch");
  for (const auto& L : w.layers) {
    check_shape(L.qkv_w, {3 * d, d}, "attn.qkv");
    check_shape(L.qv_b, {2 * d}, "attn.qv_b");
    check_shape(L.o_w, {d, d}, "attn.o");
    check_shape(L.fc1_w, {4 * d, d}, "mlp.fc1");
    check_shape(L.fc2_w, {d, 4 * d}, "mlp.fc2");
  }
}

}  // namespace

VisionWeights init_vision(const VisionConfig& cfg, std::size_t frame_px, Rng& rng) {
  cfg.validate(frame_px);
  const std::size_t d = cfg.d_vis;
  const std::size_t side = cfg.grid_side(frame_px);
  VisionWeights w;
  w.embed_w = init_linear(d, cfg.patch_dim(), rng);
  w.embed_b = Tensor({d});
  w.pos = randn({side * side, d}, rng, 0.1);
  const double resid_gain = 1.0 / std::sqrt(2.0 * static_cast<double>(cfg.encoder_layers));
  for (std::size_t i = 0; i < cfg.encoder_layers; ++i) {
    EncoderLayerWeights L;
    L.ln1_g = Tensor({d}, 1.0);
    L.ln1_b = Tensor({d});
    L.qkv_w = init_linear(3 * d, d, rng);
    L.qv_b = Tensor({2 * d});
    L.o_w = init_linear(d, d, rng, resid_gain);
    L.o_b = Tensor({d});
    L.ln2_g = Tensor({d}, 1.0);
    L.ln2_b = Tensor({d});
    L.fc1_w = init_linear(4 * d, d, rng);
    L.fc1_b = Tensor({4 * d});
    L.fc2_w = init_linear(d, 4 * d, rng, resid_gain);
    L.fc2_b = Tensor({d});
    w.layers.push_back(std::move(L));
  }
  w.lnf_g = Tensor({d}, 1.0);
  w.lnf_b = Tensor({d});
  return w;
}

ProjectorWeights init_projector(const VisionConfig& cfg, Rng& rng) {
  ProjectorWeights w;
  w.fc1_w = init_linear(cfg.d_model, cfg.d_vis, rng);
  w.fc1_b = Tensor({cfg.d_model});
  w.fc2_w = init_linear(cfg.d_model, cfg.d_model, rng);
  w.fc2_b = Tensor({cfg.d_model});
  return w;
}

VisionWeights zeros_like(const VisionWeights& w) {
  VisionWeights z = w;
  visit_vision([](const std::string&, Tensor& t) { t.fill(0.0); }, z);
  return z;
}

ProjectorWeights zeros_like(const ProjectorWeights& w) {
  ProjectorWeights z = w;
  visit_projector([](const std::string&, Tensor& t) { t.fill(0.0); }, z);
  return z;
}

FeatureGrid encode_frames(const Tensor& frames, const VisionConfig& cfg, const VisionWeights& w,
                          EncoderCache* cache) {
  if (frames.rank() != 4 || frames.dim(1) != 3 || frames.dim(2) != frames.dim(3)) {
    throw DimensionError("encode_frames expects square frames [T x 3 x H x W], got " +
                         shape_str(frames.shape()));
  }
  const std::size_t T = frames.dim(0);
  const std::size_t px = frames.dim(2);
  cfg.validate(px);
  const std::size_t side = cfg.grid_side(px);
  const std::size_t np = side * side;
  check_weights(cfg, w, np);

  Tensor patches({T * np, cfg.patch_dim()});
  const std::size_t per_frame = 3 * px * px;
  for (std::size_t t = 0; t < T; ++t) {
    Tensor frame({3, px, px},
                 std::vector<double>(frames.data() + t * per_frame, frames.data() + (t + 1) * per_frame));
    Tensor p = patchify(frame, cfg.patch_px);
    std::memcpy(patches.data() + t * p.size(), p.data(), p.size() * sizeof(double));
  }

  Tensor x = num::linear(patches, w.embed_w, w.embed_b);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    auto pr = w.pos.row(r % np);
    for (std::size_t c = 0; c < xr.size(); ++c) xr[c] += pr[c];
  }

  std::vector<EncoderLayerCache> layer_caches;
  for (const auto& L : w.layers) {
    EncoderLayerCache lc;
    lc.x_in = x;
    lc.h1 = num::layer_norm(x, L.ln1_g, L.ln1_b, kLayerNormEps, &lc.ln1);
    auto [q, k, v] = split3(num::linear(lc.h1, L.qkv_w, Tensor()));
    const std::size_t d = cfg.d_vis;
    for (std::size_t r = 0; r < q.rows(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        q.at(r, c) += L.qv_b[c];
        v.at(r, c) += L.qv_b[d + c];
      }
    }
    lc.attn_out = num::attention(q, k, v, cfg.heads, np, /*causal=*/false, &lc.attn);
    x = num::add(x, num::linear(lc.attn_out, L.o_w, L.o_b));
    lc.x_mid = x;
    lc.h2 = num::layer_norm(x, L.ln2_g, L.ln2_b, kLayerNormEps, &lc.ln2);
    lc.pre = num::linear(lc.h2, L.fc1_w, L.fc1_b);
    lc.act = num::gelu(lc.pre);
    x = num::add(x, num::linear(lc.act, L.fc2_w, L.fc2_b));
    if (cache) layer_caches.push_back(std::move(lc));
  }
  num::LayerNormCache lnf;
  Tensor y = num::layer_norm(x, w.lnf_g, w.lnf_b, kLayerNormEps, cache ? &lnf : nullptr);
  if (cache) {
    cache->patches = std::move(patches);
    cache->layers = std::move(layer_caches);
    cache->lnf = std::move(lnf);
    cache->frames = T;
    cache->side = side;
  }
  return FeatureGrid(y.reshaped({T, side, side, cfg.d_vis}));
}

void encode_frames_backward(const EncoderCache& cache, const VisionConfig& cfg,
                            const VisionWeights& w, const Tensor& dgrid, VisionWeights& grads) {
  const std::size_t np = cache.side * cache.side;
  Tensor dy = dgrid.reshaped({cache.frames * np, cfg.d_vis});
  auto lnf = num::layer_norm_backward(cache.lnf, w.lnf_g, dy);
  num::add_into(grads.lnf_g, lnf.dgain);
  num::add_into(grads.lnf_b, lnf.dbias);
  Tensor dx = std::move(lnf.dx);

  for (std::size_t li = w.layers.size(); li-- > 0;) {
    const auto& L = w.layers[li];
    const auto& lc = cache.layers[li];
    auto& G = grads.layers[li];

    // MLP branch: x_out = x_mid + fc2(gelu(fc1(ln2(x_mid))))
    auto g2 = num::linear_backward(lc.act, L.fc2_w, dx, true);
    num::add_into(G.fc2_w, g2.dw);
    num::add_into(G.fc2_b, g2.db);
    Tensor dpre = num::gelu_backward(lc.pre, g2.dx);
    auto g1 = num::linear_backward(lc.h2, L.fc1_w, dpre, true);
    num::add_into(G.fc1_w, g1.dw);
    num::add_into(G.fc1_b, g1.db);
    auto ln2 = num::layer_norm_backward(lc.ln2, L.ln2_g, g1.dx);
    num::add_into(G.ln2_g, ln2.dgain);
    num::add_into(G.ln2_b, ln2.dbias);
    num::add_into(dx, ln2.dx);

    // Attention branch: x_mid = x_in + o(attn(qkv(ln1(x_in))))
    auto go = num::linear_backward(lc.attn_out, L.o_w, dx, true);
    num::add_into(G.o_w, go.dw);
    num::add_into(G.o_b, go.db);
    auto ga = num::attention_backward(lc.attn, go.dx);
    Tensor dqkv = join3(ga.dq, ga.dk, ga.dv);
    auto gq = num::linear_backward(lc.h1, L.qkv_w, dqkv, false);
    num::add_into(G.qkv_w, gq.dw);
    const Tensor dq_b = num::sum_rows(ga.dq), dv_b = num::sum_rows(ga.dv);
    for (std::size_t c = 0; c < cfg.d_vis; ++c) {
      G.qv_b[c] += dq_b[c];
      G.qv_b[cfg.d_vis + c] += dv_b[c];
    }
    auto ln1 = num::layer_norm_backward(lc.ln1, L.ln1_g, gq.dx);
    num::add_into(G.ln1_g, ln1.dgain);
    num::add_into(G.ln1_b, ln1.dbias);
    num::add_into(dx, ln1.dx);
  }

  for (std::size_t r = 0; r < dx.rows(); ++r) {
    auto dr = dx.row(r);
    auto gp = grads.pos.row(r % np);
    for (std::size_t c = 0; c < dr.size(); ++c) gp[c] += dr[c];
  }
  auto ge = num::linear_backward(cache.patches, w.embed_w, dx, true);
  num::add_into(grads.embed_w, ge.dw);
  num::add_into(grads.embed_b, ge.db);
}

FeatureGrid project(const FeatureGrid& grid, const ProjectorWeights& w, ProjectorCache* cache) {
  const Tensor& g = grid.tensor();
  if (w.fc1_w.rank() != 2 || g.cols() != w.fc1_w.dim(1)) {
    throw DimensionError("project: grid width " + std::to_string(g.cols()) +
                         " does not match projector input " + shape_str(w.fc1_w.shape()));
  }
  Tensor x = g.reshaped({grid.tokens(), g.cols()});
  Tensor pre = num::linear(x, w.fc1_w, w.fc1_b);
  Tensor act = num::gelu(pre);
  Tensor y = num::linear(act, w.fc2_w, w.fc2_b);
  if (cache) *cache = {std::move(x), std::move(pre), std::move(act)};
  return FeatureGrid(y.reshaped({grid.frames(), grid.width(), grid.height(), w.fc2_w.dim(0)}));
}

Tensor project_backward(const ProjectorCache& cache, const ProjectorWeights& w, const Tensor& dout,
                        ProjectorWeights& grads) {
  Tensor dy = dout.reshaped({cache.act.rows(), w.fc2_w.dim(0)});
  auto g2 = num::linear_backward(cache.act, w.fc2_w, dy, true);
  num::add_into(grads.fc2_w, g2.dw);
  num::add_into(grads.fc2_b, g2.db);
  Tensor dpre = num::gelu_backward(cache.pre, g2.dx);
  auto g1 = num::linear_backward(cache.x, w.fc1_w, dpre, true);
  num::add_into(grads.fc1_w, g1.dw);
  num::add_into(grads.fc1_b, g1.db);
  return g1.dx;
}

}  // namespace pllab
