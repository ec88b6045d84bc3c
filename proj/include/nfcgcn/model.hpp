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
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nfcgcn/graph.hpp"
#include "nfcgcn/kernels.hpp"
#include "nfcgcn/ops.hpp"
#include "nfcgcn/sampling.hpp"
#include "json.hpp"

namespace nfcgcn {

enum class Variant {
  kNfcGcn,       // convolution -> K mean-aggregation GCN layers -> classifier
  kGcnBaseline,  // K symmetric-normalized GCN layers on raw features, last one emits logits
  kNfcOnly,      // convolution -> classifier
  kMean5Only,    // mean of the n sampled feature vectors -> classifier
};

// How NFC-GCN's GCN layers aggregate: mean over {i} and its full neighborhood
// (row-stochastic D~^-1 A~) or the symmetric D~^-1/2 A~ D~^-1/2.
enum class Aggregation { kMean, kSymmetric };

struct ModelSpec {
  Variant variant = Variant::kNfcGcn;
  ConvSpec conv;
  std::vector<std::size_t> gcn_dims;  // one width per GCN layer
  int num_classes = 0;
  double dropout = 0.5;
  std::size_t bandwidth = 6;
  bool classifier_affine = true;
  // Dropout on the classifier's input when it follows GCN layers. Without
  // GCN layers the classifier reads H^(0), which is always dropped.
  bool head_dropout = true;
  Aggregation aggregation = Aggregation::kMean;

  bool uses_maps() const { return variant != Variant::kGcnBaseline; }
  bool uses_conv() const { return variant == Variant::kNfcGcn || variant == Variant::kNfcOnly; }
  // True when a separate affine classifier follows the last GCN layer.
  bool has_head() const { return variant != Variant::kGcnBaseline && classifier_affine; }
  std::size_t depth() const { return gcn_dims.size(); }
};

// Throws UsageError naming the first inconsistency.
void validate_spec(const ModelSpec& spec, std::size_t feat_dim);
// Width of the first-level representation H^(0).
std::size_t representation_width(const ModelSpec& spec, std::size_t feat_dim);

std::string variant_name(Variant v);
Variant parse_variant(const std::string& s);
nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

struct ModelParams {
  ParamTensor filters;
  ParamTensor filter_bias;
  std::vector<ParamTensor> gcn_weights;
  ParamTensor classifier;
  ParamTensor classifier_bias;

  // Present tensors in a fixed order: filters, filter bias, GCN weights, classifier, classifier bias.
  std::vector<ParamTensor*> list();
  std::vector<const ParamTensor*> list() const;
  void zero_grad();
};

ModelParams init_params(const ModelSpec& spec, std::size_t feat_dim, std::uint64_t seed);

// Everything the forward pass reads besides parameters.
struct ModelInputs {
  const Graph* graph = nullptr;
  NormalizedAdjacency propagate;    // P
  NormalizedAdjacency propagate_t;  // P^T
  kernels::SparseRows sparse_features;
  NeighborhoodTable maps;
  std::uint64_t sample_seed = 0;
};

ModelInputs make_inputs(const Graph& g, const ModelSpec& spec, std::uint64_t sample_seed);
void resample_maps(ModelInputs& in, const ModelSpec& spec, std::uint64_t sample_seed);

struct ForwardCache {
  bool training = false;
  // activations[k] is H^(k) as read by the next layer, i.e. after dropout in
  // training mode. For k < K (or a classifier head), dropout masks[k] applies.
  std::vector<Matrix> activations;
  std::vector<DropoutMask> masks;
  Matrix logits;
  // Smallest |z| over all ReLU inputs; gradient checks stay away from kinks.
  double min_abs_relu_input = std::numeric_limits<double>::infinity();
  // Reused by model_backward for the gradient w.r.t. H^(0).
  mutable Matrix scratch;
};

ForwardCache model_forward(const ModelSpec& spec, const ModelParams& params, const ModelInputs& in, bool training,
                           Rng& rng);
// Same, reusing `cache`'s buffers. With `inference_only` (evaluation mode
// only) the convolution output is folded into the next layer's weights and
// activations[0] is left empty, so the cache cannot feed model_backward.
void model_forward(const ModelSpec& spec, const ModelParams& params, const ModelInputs& in, bool training, Rng& rng,
                   ForwardCache& cache, bool inference_only = false);

struct LossBreakdown {
  double data = 0.0;  // mean cross-entropy over the labeled rows
  double l2 = 0.0;
  double total() const { return data + l2; }
};

// Mean cross-entropy over rows with mask[i] != 0; zero when the mask is empty.
double masked_loss(const Matrix& logits, const std::vector<int>& labels, std::span<const std::uint8_t> mask);

// Zeroes and fills every parameter gradient with d(loss)/d(param), where loss
// is masked_loss over `mask` plus the L2 penalty.
LossBreakdown model_backward(const ModelSpec& spec, ModelParams& params, const ModelInputs& in,
                             const ForwardCache& cache, std::span<const std::uint8_t> mask, double l2);

// argmax per row, lowest class index on ties.
std::vector<int> predict(const Matrix& logits);
// Fraction of mask nodes predicted correctly; throws UsageError on an empty mask.
double accuracy(const Matrix& logits, const std::vector<int>& labels, std::span<const std::uint8_t> mask);

struct Checkpoint {
  ModelSpec spec;
  std::size_t feat_dim = 0;
  std::uint64_t sample_seed = 0;
  ModelParams params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Validates every tensor against the shape chain implied by the stored spec.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nfcgcn
