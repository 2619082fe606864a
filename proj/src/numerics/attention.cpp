// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/numerics/attention.hpp"

#include <cmath>
#include <limits>

#include "eigen_view.hpp"
#include "pllab/errors.hpp"

namespace pllab::num {

using detail::ConstMatView;
using detail::MatView;
using detail::RowMat;
using detail::view;

namespace {

void check_inputs(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                  std::size_t block) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.rank() != 2) {
    throw DimensionError("attention: q/k/v must share a rank-2 shape, got " + shape_str(q.shape()) +
                         ", " + shape_str(k.shape()) + ", " + shape_str(v.shape()));
  }
  if (heads == 0 || q.cols() % heads != 0) {
    throw DimensionError("attention: width " + std::to_string(q.cols()) +
                         " not divisible by heads " + std::to_string(heads));
  }
  if (block == 0 || q.rows() % block != 0) {
    throw DimensionError("attention: " + std::to_string(q.rows()) +
                         " rows not divisible into blocks of " + std::to_string(block));
  }
}

}  // namespace

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::size_t block, bool causal, AttentionCache* cache) {
  check_inputs(q, k, v, heads, block);
  const auto n = static_cast<Eigen::Index>(q.rows());
  const auto d = static_cast<Eigen::Index>(q.cols());
  const auto B = static_cast<Eigen::Index>(block);
  const auto dh = d / static_cast<Eigen::Index>(heads);
  const Eigen::Index blocks = n / B;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor out(q.shape());
  Tensor probs({static_cast<std::size_t>(blocks) * heads, block, block});
  auto Q = view(q);
  auto K = view(k);
  auto V = view(v);
  auto O = view(out);

  RowMat S(B, B);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    for (Eigen::Index h = 0; h < static_cast<Eigen::Index>(heads); ++h) {
      auto Qb = Q.block(b * B, h * dh, B, dh);
      auto Kb = K.block(b * B, h * dh, B, dh);
      auto Vb = V.block(b * B, h * dh, B, dh);
      S.noalias() = inv_sqrt * (Qb * Kb.transpose());
      MatView P(probs.data() + (b * static_cast<Eigen::Index>(heads) + h) * B * B, B, B);
      for (Eigen::Index i = 0; i < B; ++i) {
        const Eigen::Index last = causal ? i : B - 1;
        const double mx = S.row(i).head(last + 1).maxCoeff();
        double total = 0.0;
        for (Eigen::Index j = 0; j <= last; ++j) {
          P(i, j) = std::exp(S(i, j) - mx);
          total += P(i, j);
        }
        for (Eigen::Index j = 0; j <= last; ++j) P(i, j) /= total;
        for (Eigen::Index j = last + 1; j < B; ++j) P(i, j) = 0.0;
      }
      O.block(b * B, h * dh, B, dh).noalias() = P * Vb;
    }
  }
  if (cache) {
    cache->q = q;
    cache->k = k;
    cache->v = v;
    cache->probs = std::move(probs);
    cache->heads = heads;
    cache->block = block;
    cache->causal = causal;
  }
  return out;
}

AttentionGrads attention_backward(const AttentionCache& cache, const Tensor& dout) {
  if (dout.shape() != cache.q.shape()) {
    throw DimensionError("attention_backward: gradient " + shape_str(dout.shape()) + " vs " +
                         shape_str(cache.q.shape()));
  }
  const auto n = static_cast<Eigen::Index>(cache.q.rows());
  const auto d = static_cast<Eigen::Index>(cache.q.cols());
  const auto B = static_cast<Eigen::Index>(cache.block);
  const auto H = static_cast<Eigen::Index>(cache.heads);
  const auto dh = d / H;
  const Eigen::Index blocks = n / B;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  AttentionGrads g{Tensor(cache.q.shape()), Tensor(cache.q.shape()), Tensor(cache.q.shape())};
  auto Q = view(cache.q);
  auto K = view(cache.k);
  auto V = view(cache.v);
  auto dO = view(dout);
  auto dQ = view(g.dq);
  auto dK = view(g.dk);
  auto dV = view(g.dv);

  RowMat dP(B, B);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    for (Eigen::Index h = 0; h < H; ++h) {
      ConstMatView P(cache.probs.data() + (b * H + h) * B * B, B, B);
      auto dOb = dO.block(b * B, h * dh, B, dh);
      dP.noalias() = dOb * V.block(b * B, h * dh, B, dh).transpose();
      dV.block(b * B, h * dh, B, dh).noalias() += P.transpose() * dOb;
      // Softmax backward, then fold in the 1/sqrt(dh) scale.
      for (Eigen::Index i = 0; i < B; ++i) {
        double dot = 0.0;
        for (Eigen::Index j = 0; j < B; ++j) dot += P(i, j) * dP(i, j);
        for (Eigen::Index j = 0; j < B; ++j) dP(i, j) = P(i, j) * (dP(i, j) - dot) * inv_sqrt;
      }
      dQ.block(b * B, h * dh, B, dh).noalias() += dP * K.block(b * B, h * dh, B, dh);
      dK.block(b * B, h * dh, B, dh).noalias() += dP.transpose() * Q.block(b * B, h * dh, B, dh);
    }
  }
  return g;
}

}  // namespace pllab::num
