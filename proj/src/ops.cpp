/* Copyright 2026 The nfcgcn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "nfcgcn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nfcgcn/error.hpp"

namespace nfcgcn {

kernels::ConvGeometry ConvSpec::geometry(std::size_t feat_dim, std::size_t bandwidth) const {
  kernels::ConvGeometry g;
  g.feat_dim = feat_dim;
  g.bandwidth = bandwidth;
  g.k = k;
  g.stride_feat = stride_feat;
  g.filters = filters;
  if (mode == ConvMode::kConv1D) {
    g.width = bandwidth;
    g.stride_node = 1;
  } else {
    g.width = width;
    g.stride_node = stride_node;
  }
  if (k < 1 || k > feat_dim) {
    throw UsageError("filter length k=" + std::to_string(k) + " must lie in [1, D=" + std::to_string(feat_dim) + "]");
  }
  if (g.width < 1 || g.width > bandwidth) {
    throw UsageError("filter width " + std::to_string(g.width) + " must lie in [1, n=" + std::to_string(bandwidth) +
                     "]");
  }
  if (stride_feat < 1 || g.stride_node < 1 || filters < 1) throw UsageError("strides and filter count must be >= 1");
  return g;
}

std::vector<std::size_t> ConvSpec::filter_shape(std::size_t bandwidth) const {
  return {filters, k, mode == ConvMode::kConv1D ? bandwidth : width};
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values) v = (2.0 * rng.uniform() - 1.0) * r;
}

namespace {

// A single D x n map seen as n one-row "nodes" so the batched reference
// kernels apply unchanged.
struct MapAsTable {
  Matrix x;
  NeighborhoodTable table;

  explicit MapAsTable(const Matrix& map) : x(map.cols(), map.rows()), table(1, map.cols()) {
    for (std::size_t r = 0; r < map.rows(); ++r) {
      for (std::size_t c = 0; c < map.cols(); ++c) x(c, r) = map(r, c);
    }
    for (std::size_t c = 0; c < map.cols(); ++c) table.row(0)[c] = static_cast<NodeId>(c);
  }
};

std::vector<std::size_t> conv_output_shape(const ConvSpec& spec, const kernels::ConvGeometry& geo) {
  if (spec.mode == ConvMode::kConv1D) return {geo.out_feat(), geo.filters};
  return {geo.out_feat(), geo.out_node(), geo.filters};
}

void check_filters(const Tensor& filters, const ConvSpec& spec, std::size_t bandwidth) {
  if (filters.shape != spec.filter_shape(bandwidth)) {
    throw UsageError("filter bank has shape " + filters.shape_string() + ", convolution expects " +
                     Tensor(spec.filter_shape(bandwidth)).shape_string());
  }
}

}  // namespace

Tensor nfc_forward(const Matrix& map, const Tensor& filters, const Tensor* bias, const ConvSpec& spec) {
  const auto geo = spec.geometry(map.rows(), map.cols());
  check_filters(filters, spec, map.cols());
  const MapAsTable in(map);
  Matrix flat;
  kernels::serial::conv_forward(in.x, in.table, geo, filters.values,
                                bias ? std::span<const double>(bias->values) : std::span<const double>{}, flat);
  Tensor out(conv_output_shape(spec, geo));
  out.values = flat.values();
  return out;
}

Matrix nfc_backward(const Matrix& map, Tensor& filters, Tensor* bias, const ConvSpec& spec, const Tensor& dout) {
  const auto geo = spec.geometry(map.rows(), map.cols());
  check_filters(filters, spec, map.cols());
  if (dout.numel() != geo.flat_size()) throw UsageError("nfc_backward: upstream gradient has wrong size");
  if (filters.grad.size() != filters.numel()) filters.zero_grad();
  if (bias && bias->grad.size() != bias->numel()) bias->zero_grad();
  const MapAsTable in(map);
  const Matrix g(1, geo.flat_size(), dout.values);
  kernels::serial::conv_backward(in.x, in.table, geo, g, filters.grad,
                                 bias ? std::span<double>(bias->grad) : std::span<double>{});

  Matrix dmap(map.rows(), map.cols());
  const std::size_t np = geo.out_node();
  for (std::size_t p = 0; p < geo.out_feat(); ++p) {
    for (std::size_t q = 0; q < np; ++q) {
      for (std::size_t f = 0; f < geo.filters; ++f) {
        const double up = dout.values[(p * np + q) * geo.filters + f];
        for (std::size_t a = 0; a < geo.k; ++a) {
          for (std::size_t b = 0; b < geo.width; ++b) {
            dmap(p * geo.stride_feat + a, q * geo.stride_node + b) +=
                up * filters.values[(f * geo.k + a) * geo.width + b];
          }
        }
      }
    }
  }
  return dmap;
}

Tensor nfc_flatten(const Tensor& t) {
  if (t.rank() != 2 && t.rank() != 3) throw UsageError("nfc_flatten expects a rank-2 or rank-3 tensor");
  Tensor out({t.numel()});
  out.values = t.values;
  return out;
}

namespace {

Matrix as_matrix(const Tensor& w) {
  if (w.rank() != 2) throw UsageError("weight tensor must be rank 2, got " + w.shape_string());
  return Matrix(w.shape[0], w.shape[1], w.values);
}

}  // namespace

Matrix affine_forward(const Matrix& x, const Tensor& w, const Tensor* b) {
  const Matrix wm = as_matrix(w);
  if (x.cols() != wm.rows()) {
    throw UsageError("affine: input width " + std::to_string(x.cols()) + " does not match weight " + w.shape_string());
  }
  if (b && b->numel() != wm.cols()) throw UsageError("affine: bias length does not match weight");
  Matrix y;
  kernels::parallel::gemm(x, wm, y);
  if (b) {
    for (std::size_t i = 0; i < y.rows(); ++i) {
      auto row = y.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += b->values[j];
    }
  }
  return y;
}

Matrix affine_backward(const Matrix& x, Tensor& w, Tensor* b, const Matrix& dy) {
  const Matrix wm = as_matrix(w);
  if (dy.rows() != x.rows() || dy.cols() != wm.cols() || x.cols() != wm.rows()) {
    throw UsageError("affine_backward: shape mismatch");
  }
  if (w.grad.size() != w.numel()) w.zero_grad();
  Matrix dw(wm.rows(), wm.cols(), w.grad);
  kernels::parallel::gemm_tn_acc(x, dy, dw);
  w.grad = std::move(dw.values());
  if (b) {
    if (b->grad.size() != b->numel()) b->zero_grad();
    for (std::size_t i = 0; i < dy.rows(); ++i) {
      const auto row = dy.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) b->grad[j] += row[j];
    }
  }
  Matrix dx;
  kernels::parallel::gemm_nt(dy, wm, dx);
  return dx;
}

Matrix relu_forward(const Matrix& x) {
  Matrix y = x;
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Matrix relu_backward(const Matrix& y, const Matrix& dy) {
  if (y.rows() != dy.rows() || y.cols() != dy.cols()) throw UsageError("relu_backward: shape mismatch");
  Matrix dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(y.values()[i] > 0.0)) dx.values()[i] = 0.0;
  }
  return dx;
}

Matrix dropout_forward(const Matrix& x, double rate, bool training, Rng& rng, DropoutMask& mask) {
  mask = {};
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw UsageError("dropout rate must be < 1");
  draw_dropout_mask(x.size(), rate, rng.next(), mask);
  Matrix y = x;
  dropout_apply_inplace(y, mask);
  return y;
}

void draw_dropout_mask(std::size_t size, double rate, std::uint64_t stream, DropoutMask& mask) {
  if (rate < 0.0 || rate >= 1.0) throw UsageError("dropout rate must lie in [0, 1)");
  mask.scale = 1.0 / (1.0 - rate);
  mask.keep.resize(size);
  const auto n = static_cast<std::ptrdiff_t>(size);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(derive_seed(stream, static_cast<std::uint64_t>(i)) >> 11) * 0x1.0p-53;
    mask.keep[static_cast<std::size_t>(i)] = u >= rate ? 1 : 0;
  }
}

void dropout_apply_inplace(Matrix& x, const DropoutMask& mask) {
  if (mask.identity()) return;
  auto& v = x.values();
  const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    v[k] *= static_cast<double>(mask.keep[k]) * mask.scale;
  }
}

Matrix dropout_backward(const Matrix& dy, const DropoutMask& mask) {
  Matrix dx = dy;
  dropout_apply_inplace(dx, mask);
  return dx;
}

Matrix softmax(const Matrix& logits) {
  Matrix p = logits;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto row = p.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (auto& v : row) {
      v = std::exp(v - mx);
      z += v;
    }
    for (auto& v : row) v /= z;
  }
  return p;
}

SoftmaxLoss softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) {
    throw UsageError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  SoftmaxLoss out;
  out.dlogits = softmax(logits);
  const auto classes = static_cast<int>(logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= classes) {
      throw DataError("label " + std::to_string(y) + " outside [0," + std::to_string(classes) + ")");
    }
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    out.loss += -(row[static_cast<std::size_t>(y)] - mx - std::log(z));
    out.dlogits(i, static_cast<std::size_t>(y)) -= 1.0;
  }
  return out;
}

double l2_penalty(std::span<ParamTensor* const> params, double lambda) {
  double total = 0.0;
  for (ParamTensor* p : params) {
    if (!p->is_weight || !p->present()) continue;
    auto& t = p->tensor;
    if (t.grad.size() != t.numel()) t.zero_grad();
    for (std::size_t i = 0; i < t.numel(); ++i) {
      total += t.values[i] * t.values[i];
      t.grad[i] += 2.0 * lambda * t.values[i];
    }
  }
  return lambda * total;
}

}  // namespace nfcgcn
