// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eigen_view.hpp"
#include "pllab/errors.hpp"

namespace pllab::num {

using detail::view;
using detail::with_last;

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.cols() != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_str(a.shape()) + " by " +
                         shape_str(b.shape()));
  }
  Tensor out(with_last(a.shape(), b.dim(1)));
  view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.cols() != b.dim(1)) {
    throw DimensionError("matmul_nt: cannot multiply " + shape_str(a.shape()) + " by transpose of " +
                         shape_str(b.shape()));
  }
  Tensor out(with_last(a.shape(), b.dim(0)));
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: row mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  Tensor out({a.cols(), b.cols()});
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose expects rank 2, got " + shape_str(a.shape()));
  Tensor out({a.dim(1), a.dim(0)});
  view(out) = view(a).transpose();
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (auto& v : out.values()) v *= s;
  return out;
}

void add_into(Tensor& acc, const Tensor& x, double s) {
  require_same(acc, x, "add_into");
  double* p = acc.data();
  const double* q = x.data();
  for (std::size_t i = 0; i < acc.size(); ++i) p[i] += s * q[i];
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.size() != x.cols()) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " vs input " +
                         shape_str(x.shape()));
  }
  Tensor out = x;
  view(out).rowwise() += detail::ConstMatView(bias.data(), 1, static_cast<Eigen::Index>(bias.size()))
                             .row(0);
  return out;
}

Tensor sum_rows(const Tensor& x) {
  // Plain loops: Eigen's vectorized reductions order the sum by pointer alignment.
  Tensor out({x.cols()});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c];
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  Tensor out = x;
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = out.row(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : row) mx = std::isnan(v) ? v : std::max(mx, v);
    double total = 0.0;
    for (auto& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (std::size_t i = 0; i < n; ++i) row[i] /= total;
  }
  return out;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy) {
  require_same(y, dy, "softmax_backward");
  Tensor dx(y.shape());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto yr = y.row(r);
    auto gr = dy.row(r);
    double dot = 0.0;
    for (std::size_t i = 0; i < yr.size(); ++i) dot += yr[i] * gr[i];
    auto out = dx.row(r);
    for (std::size_t i = 0; i < yr.size(); ++i) out[i] = yr[i] * (gr[i] - dot);
  }
  return dx;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps,
                  LayerNormCache* cache) {
  const std::size_t d = x.cols();
  if (gain.size() != d || bias.size() != d) {
    throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " vs input " + shape_str(x.shape()));
  }
  Tensor y(x.shape());
  Tensor xhat(x.shape());
  std::vector<double> rstd(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double s = 1.0 / std::sqrt(var + eps);
    rstd[r] = s;
    auto hr = xhat.row(r);
    auto yr = y.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      hr[i] = (xr[i] - mean) * s;
      yr[i] = gain[i] * hr[i] + bias[i];
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const Tensor& gain,
                                   const Tensor& dy) {
  const Tensor& xhat = cache.xhat;
  require_same(xhat, dy, "layer_norm_backward");
  const std::size_t d = xhat.cols();
  LayerNormGrads g{Tensor(xhat.shape()), Tensor({d}), Tensor({d})};
  for (std::size_t r = 0; r < xhat.rows(); ++r) {
    auto hr = xhat.row(r);
    auto gr = dy.row(r);
    double mean_g = 0.0;
    double mean_gh = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double dh = gr[i] * gain[i];
      mean_g += dh;
      mean_gh += dh * hr[i];
      g.dgain[i] += gr[i] * hr[i];
      g.dbias[i] += gr[i];
    }
    mean_g /= static_cast<double>(d);
    mean_gh /= static_cast<double>(d);
    auto dx = g.dx.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      dx[i] = cache.rstd[r] * (gr[i] * gain[i] - mean_g - hr[i] * mean_gh);
    }
  }
  return g;
}

Tensor gelu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) {
    const double u = kSqrt2OverPi * (v + kGeluCoeff * v * v * v);
    v = 0.5 * v * (1.0 + std::tanh(u));
  }
  return y;
}

Tensor gelu_backward(const Tensor& x, const Tensor& dy) {
  require_same(x, dy, "gelu_backward");
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double u = kSqrt2OverPi * (v + kGeluCoeff * v * v * v);
    const double t = std::tanh(u);
    const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoeff * v * v);
    dx[i] = dy[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
  }
  return dx;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  Tensor y = matmul_nt(x, w);
  if (!bias.empty()) {
    if (bias.size() != w.dim(0)) {
      throw DimensionError("linear: bias " + shape_str(bias.shape()) + " vs weight " +
                           shape_str(w.shape()));
    }
    view(y).rowwise() +=
        detail::ConstMatView(bias.data(), 1, static_cast<Eigen::Index>(bias.size())).row(0);
  }
  return y;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, bool with_bias) {
  LinearGrads g;
  g.dx = matmul(dy, w).reshaped(x.shape());
  g.dw = matmul_tn(dy, x);
  if (with_bias) g.db = sum_rows(dy);
  return g;
}

}  // namespace pllab::num
