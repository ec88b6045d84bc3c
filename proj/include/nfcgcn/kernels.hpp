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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nfcgcn/graph.hpp"
#include "nfcgcn/sampling.hpp"
#include "nfcgcn/tensor.hpp"

// Compute kernels behind nn-ops and the model. Every kernel exists twice:
// `serial` is a direct transcription of the defining sums, kept as the
// reference for tests and benchmarks; `parallel` is the OpenMP version the
// pipeline runs. Parallel reductions are split into fixed blocks merged in
// index order, so results do not depend on the thread count.
namespace nfcgcn::kernels {

// Row-compressed copy of a mostly-zero matrix (bag-of-words features).
struct SparseRows {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  static SparseRows from_dense(const Matrix& m);
};

// Geometry of a valid-padding convolution over a D x n map with filters of
// shape c x k x width. 1D convolution is the width == n case.
struct ConvGeometry {
  std::size_t feat_dim = 0;     // D
  std::size_t bandwidth = 0;    // n
  std::size_t k = 1;            // filter extent along features
  std::size_t width = 1;        // filter extent along nodes
  std::size_t stride_feat = 1;  // s
  std::size_t stride_node = 1;
  std::size_t filters = 1;      // c

  std::size_t out_feat() const { return (feat_dim - k) / stride_feat + 1; }
  std::size_t out_node() const { return (bandwidth - width) / stride_node + 1; }
  std::size_t flat_size() const { return out_feat() * out_node() * filters; }
  std::size_t filter_size() const { return filters * k * width; }
};

void set_num_threads(int n);
int max_threads();

namespace serial {

// C = A * B
void gemm(const Matrix& a, const Matrix& b, Matrix& c);
// C += A^T * B
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
// C = A * B^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
// C = P * H
void spmm(const NormalizedAdjacency& p, const Matrix& h, Matrix& c);

// out(i, (p*n'+q)*c+f) = bias[f] + sum_{a,b} X[member(i, q*stride_node+b), p*s+a] * W[f,a,b]
void conv_forward(const Matrix& x, const NeighborhoodTable& table, const ConvGeometry& geo,
                  std::span<const double> filters, std::span<const double> bias, Matrix& out);
// Accumulates dL/dW and dL/dbias given dL/dout. `bias_grad` may be empty.
void conv_backward(const Matrix& x, const NeighborhoodTable& table, const ConvGeometry& geo, const Matrix& dout,
                   std::span<double> filter_grad, std::span<double> bias_grad);

// out(i, :) = mean_j X[member(i, j), :]
void neighborhood_mean(const Matrix& x, const NeighborhoodTable& table, Matrix& out);

// C = (A * B^T) with entries where keep == 0 zeroed and the rest times `scale`.
void gemm_nt_masked(const Matrix& a, const Matrix& b, std::span<const std::uint8_t> keep, double scale, Matrix& c);

// out = conv_forward(X) * W without materializing the convolution output.
void conv_project(const Matrix& x, const NeighborhoodTable& table, const ConvGeometry& geo,
                  std::span<const double> filters, std::span<const double> bias, const Matrix& w, Matrix& out);

}  // namespace serial

namespace parallel {

void gemm(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void spmm(const NormalizedAdjacency& p, const Matrix& h, Matrix& c);

// Sparse-input versions: work proportional to the nonzeros of each map.
void conv_forward(const SparseRows& x, const NeighborhoodTable& table, const ConvGeometry& geo,
                  std::span<const double> filters, std::span<const double> bias, Matrix& out);
void conv_backward(const SparseRows& x, const NeighborhoodTable& table, const ConvGeometry& geo, const Matrix& dout,
                   std::span<double> filter_grad, std::span<double> bias_grad);

void neighborhood_mean(const Matrix& x, const NeighborhoodTable& table, Matrix& out);

void gemm_nt_masked(const Matrix& a, const Matrix& b, std::span<const std::uint8_t> keep, double scale, Matrix& c);

// Folds filters and W into a per-(feature row, map column) table first, so the
// cost per node is proportional to its nonzeros times W's width.
void conv_project(const SparseRows& x, const NeighborhoodTable& table, const ConvGeometry& geo,
                  std::span<const double> filters, std::span<const double> bias, const Matrix& w, Matrix& out);

}  // namespace parallel

}  // namespace nfcgcn::kernels
