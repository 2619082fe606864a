// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/pooling/pooling.hpp"

#include <algorithm>

#include "pllab/errors.hpp"

namespace pllab {

void PoolSpec::validate(std::size_t T, std::size_t w, std::size_t h) const {
  if (t_out < 1 || t_out > T || w_out < 1 || w_out > w || h_out < 1 || h_out > h) {
    throw DimensionError("pool spec " + str() + " is invalid for grid (" + std::to_string(T) + "," +
                         std::to_string(w) + "," + std::to_string(h) + ")");
  }
}

std::string PoolSpec::str() const {
  return "(" + std::to_string(t_out) + "," + std::to_string(w_out) + "," + std::to_string(h_out) + ")";
}

std::vector<Bin> pool_bins(std::size_t in_len, std::size_t out_len) {
  if (out_len < 1 || out_len > in_len) {
    throw DimensionError("pool_bins: cannot pool length " + std::to_string(in_len) + " to " +
                         std::to_string(out_len));
  }
  std::vector<Bin> bins(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    bins[i].start = (i * in_len) / out_len;
    bins[i].end = ((i + 1) * in_len + out_len - 1) / out_len;
  }
  return bins;
}

FeatureGrid adaptive_pool(const FeatureGrid& grid, const PoolSpec& spec) {
  const std::size_t T = grid.frames(), W = grid.width(), H = grid.height(), D = grid.channels();
  spec.validate(T, W, H);
  const auto bt = pool_bins(T, spec.t_out);
  const auto bw = pool_bins(W, spec.w_out);
  const auto bh = pool_bins(H, spec.h_out);
  const Tensor& in = grid.tensor();
  Tensor out({spec.t_out, spec.w_out, spec.h_out, D});
  std::vector<double> acc(D);
  for (std::size_t t = 0; t < spec.t_out; ++t) {
    for (std::size_t i = 0; i < spec.w_out; ++i) {
      for (std::size_t j = 0; j < spec.h_out; ++j) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t a = bt[t].start; a < bt[t].end; ++a) {
          for (std::size_t b = bw[i].start; b < bw[i].end; ++b) {
            for (std::size_t c = bh[j].start; c < bh[j].end; ++c) {
              const double* src = in.data() + ((a * W + b) * H + c) * D;
              for (std::size_t k = 0; k < D; ++k) acc[k] += src[k];
            }
          }
        }
        const double count = static_cast<double>((bt[t].end - bt[t].start) * (bw[i].end - bw[i].start) *
                                                 (bh[j].end - bh[j].start));
        double* dst = out.data() + ((t * spec.w_out + i) * spec.h_out + j) * D;
        for (std::size_t k = 0; k < D; ++k) dst[k] = acc[k] / count;
      }
    }
  }
  return FeatureGrid(std::move(out));
}

Tensor adaptive_pool_backward(const Tensor& dout, const Shape& in_shape, const PoolSpec& spec) {
  if (in_shape.size() != 4) throw DimensionError("adaptive_pool_backward: input must be rank 4");
  const std::size_t T = in_shape[0], W = in_shape[1], H = in_shape[2], D = in_shape[3];
  spec.validate(T, W, H);
  if (dout.size() != spec.tokens() * D) {
    throw DimensionError("adaptive_pool_backward: gradient " + shape_str(dout.shape()) +
                         " does not match spec " + spec.str());
  }
  const auto bt = pool_bins(T, spec.t_out);
  const auto bw = pool_bins(W, spec.w_out);
  const auto bh = pool_bins(H, spec.h_out);
  Tensor dx(in_shape);
  for (std::size_t t = 0; t < spec.t_out; ++t) {
    for (std::size_t i = 0; i < spec.w_out; ++i) {
      for (std::size_t j = 0; j < spec.h_out; ++j) {
        const double inv = 1.0 / static_cast<double>((bt[t].end - bt[t].start) *
                                                      (bw[i].end - bw[i].start) * (bh[j].end - bh[j].start));
        const double* g = dout.data() + ((t * spec.w_out + i) * spec.h_out + j) * D;
        for (std::size_t a = bt[t].start; a < bt[t].end; ++a) {
          for (std::size_t b = bw[i].start; b < bw[i].end; ++b) {
            for (std::size_t c = bh[j].start; c < bh[j].end; ++c) {
              double* dst = dx.data() + ((a * W + b) * H + c) * D;
              for (std::size_t k = 0; k < D; ++k) dst[k] += g[k] * inv;
            }
          }
        }
      }
    }
  }
  return dx;
}

double downsample_rate(std::size_t t_in, std::size_t t_out) {
  if (t_out < 1 || t_out > t_in) {
    throw DimensionError("downsample_rate: t_out " + std::to_string(t_out) + " exceeds t_in " +
                         std::to_string(t_in));
  }
  return static_cast<double>(t_out) / static_cast<double>(t_in);
}

Tensor n_frame_flatten(const FeatureGrid& grid) {
  return grid.tensor().reshaped({grid.tokens(), grid.channels()});
}

Tensor vcg_pool(const FeatureGrid& grid) {
  const std::size_t T = grid.frames(), S = grid.width() * grid.height(), D = grid.channels();
  const Tensor& in = grid.tensor();
  Tensor out({S + T, D});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      const double* src = in.data() + (t * S + s) * D;
      double* temporal = out.data() + s * D;
      double* spatial = out.data() + (S + t) * D;
      for (std::size_t k = 0; k < D; ++k) {
        temporal[k] += src[k];
        spatial[k] += src[k];
      }
    }
  }
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t k = 0; k < D; ++k) out[s * D + k] /= static_cast<double>(T);
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < D; ++k) out[(S + t) * D + k] /= static_cast<double>(S);
  }
  return out;
}

Tensor vcg_pool_backward(const Tensor& dout, const Shape& in_shape) {
  if (in_shape.size() != 4) throw DimensionError("vcg_pool_backward: input must be rank 4");
  const std::size_t T = in_shape[0], S = in_shape[1] * in_shape[2], D = in_shape[3];
  if (dout.size() != (S + T) * D) throw DimensionError("vcg_pool_backward: gradient shape mismatch");
  Tensor dx(in_shape);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double* dst = dx.data() + (t * S + s) * D;
      const double* gt = dout.data() + s * D;
      const double* gs = dout.data() + (S + t) * D;
      for (std::size_t k = 0; k < D; ++k) {
        dst[k] = gt[k] / static_cast<double>(T) + gs[k] / static_cast<double>(S);
      }
    }
  }
  return dx;
}

std::string to_string(PoolMode mode) {
  switch (mode) {
    case PoolMode::adaptive: return "adaptive";
    case PoolMode::n_frame: return "n_frame";
    case PoolMode::vcg: return "vcg";
  }
  return "adaptive";
}

PoolMode pool_mode_from_string(const std::string& s) {
  if (s == "adaptive") return PoolMode::adaptive;
  if (s == "n_frame" || s == "n-frame") return PoolMode::n_frame;
  if (s == "vcg") return PoolMode::vcg;
  throw ArgumentError("unknown pooling mode '" + s + "'");
}

Tensor visual_tokens(const FeatureGrid& grid, PoolMode mode, const PoolSpec& spec) {
  switch (mode) {
    case PoolMode::adaptive: return n_frame_flatten(adaptive_pool(grid, spec));
    case PoolMode::n_frame: return n_frame_flatten(grid);
    case PoolMode::vcg: return vcg_pool(grid);
  }
  throw ArgumentError("unknown pooling mode");
}

Tensor visual_tokens_backward(const Tensor& dtokens, const Shape& grid_shape, PoolMode mode,
                              const PoolSpec& spec) {
  switch (mode) {
    case PoolMode::adaptive: return adaptive_pool_backward(dtokens, grid_shape, spec);
    case PoolMode::n_frame: return dtokens.reshaped(grid_shape);
    case PoolMode::vcg: return vcg_pool_backward(dtokens, grid_shape);
  }
  throw ArgumentError("unknown pooling mode");
}

std::size_t visual_token_count(std::size_t T, std::size_t w, std::size_t h, PoolMode mode,
                               const PoolSpec& spec) {
  switch (mode) {
    case PoolMode::adaptive: spec.validate(T, w, h); return spec.tokens();
    case PoolMode::n_frame: return T * w * h;
    case PoolMode::vcg: return w * h + T;
  }
  return 0;
}

}  // namespace pllab
