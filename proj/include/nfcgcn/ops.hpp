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
#include <string>
#include <vector>

#include "nfcgcn/kernels.hpp"
#include "nfcgcn/rng.hpp"
#include "nfcgcn/tensor.hpp"

namespace nfcgcn {

enum class ConvMode { kConv1D, kConv2D };

// Node-feature convolution hyperparameters. kConv1D treats the n map columns
// as input channels, so its filter spans all of them; kConv2D slides a
// k x width window over a single-channel map.
struct ConvSpec {
  ConvMode mode = ConvMode::kConv1D;
  std::size_t k = 1;
  std::size_t width = 1;
  std::size_t stride_feat = 1;
  std::size_t stride_node = 1;
  std::size_t filters = 1;
  bool bias = true;

  // Throws UsageError when k > D or (2D) width > n.
  kernels::ConvGeometry geometry(std::size_t feat_dim, std::size_t bandwidth) const;
  std::vector<std::size_t> filter_shape(std::size_t bandwidth) const;
};

enum class InitScheme { kGlorotUniform, kZeros };

struct ParamTensor {
  std::string name;
  Tensor tensor;
  InitScheme init = InitScheme::kZeros;
  bool is_weight = false;  // weights get L2; biases do not

  bool present() const { return tensor.numel() > 0; }
};

// Glorot/Xavier uniform: U(-r, r), r = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// --- node-feature convolution on one D x n map ---

// Output shape [D', c] (1D) or [D', n', c] (2D). `bias` may be null.
Tensor nfc_forward(const Matrix& map, const Tensor& filters, const Tensor* bias, const ConvSpec& spec);
// Accumulates into filters.grad and bias->grad; returns dL/dmap.
Matrix nfc_backward(const Matrix& map, Tensor& filters, Tensor* bias, const ConvSpec& spec, const Tensor& dout);
// Row-major flatten to a rank-1 tensor.
Tensor nfc_flatten(const Tensor& t);

// --- dense layers over row batches ---

// y = x W + b; W is [in, out], b is [out] or absent.
Matrix affine_forward(const Matrix& x, const Tensor& w, const Tensor* b);
// Accumulates dW, db; returns dx.
Matrix affine_backward(const Matrix& x, Tensor& w, Tensor* b, const Matrix& dy);

Matrix relu_forward(const Matrix& x);
// Gradient passes where the forward output was positive.
Matrix relu_backward(const Matrix& y, const Matrix& dy);

struct DropoutMask {
  std::vector<std::uint8_t> keep;  // empty means identity
  double scale = 1.0;

  bool identity() const { return keep.empty(); }
};

// Keep flags for `size` units; unit i is kept when the i-th draw of the
// counter-based stream `stream` is >= rate, so masks do not depend on the
// thread count.
void draw_dropout_mask(std::size_t size, double rate, std::uint64_t stream, DropoutMask& mask);

// Inverted dropout in training mode, identity otherwise.
Matrix dropout_forward(const Matrix& x, double rate, bool training, Rng& rng, DropoutMask& mask);
void dropout_apply_inplace(Matrix& x, const DropoutMask& mask);
Matrix dropout_backward(const Matrix& dy, const DropoutMask& mask);

struct SoftmaxLoss {
  double loss = 0.0;  // summed over rows
  Matrix dlogits;     // softmax - onehot per row
};

// Rows of `logits` are the labeled nodes, in the order of `labels`.
SoftmaxLoss softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);
Matrix softmax(const Matrix& logits);

// lambda * sum ||W||^2 over weight tensors; adds 2 lambda W to their grads.
double l2_penalty(std::span<ParamTensor* const> params, double lambda);

}  // namespace nfcgcn
