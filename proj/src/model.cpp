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

#include "nfcgcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nfcgcn/error.hpp"

namespace nfcgcn {

namespace k = kernels::parallel;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kNfcGcn: return "NFC_GCN";
    case Variant::kGcnBaseline: return "GCN_BASELINE";
    case Variant::kNfcOnly: return "NFC_ONLY";
    case Variant::kMean5Only: return "MEAN5_ONLY";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  for (auto v : {Variant::kNfcGcn, Variant::kGcnBaseline, Variant::kNfcOnly, Variant::kMean5Only}) {
    if (s == variant_name(v)) return v;
  }
  throw UsageError("unknown model variant '" + s + "' (NFC_GCN, GCN_BASELINE, NFC_ONLY, MEAN5_ONLY)");
}

void validate_spec(const ModelSpec& spec, std::size_t feat_dim) {
  if (spec.num_classes < 1) throw UsageError("model: num_classes must be positive");
  if (spec.dropout < 0.0 || spec.dropout >= 1.0) throw UsageError("model: dropout must lie in [0, 1)");
  if (spec.bandwidth < 1) throw UsageError("model: bandwidth must be at least 1");
  for (std::size_t i = 0; i < spec.gcn_dims.size(); ++i) {
    if (spec.gcn_dims[i] == 0) throw UsageError("model: GCN layer " + std::to_string(i + 1) + " has width 0");
  }
  const auto classes = static_cast<std::size_t>(spec.num_classes);
  switch (spec.variant) {
    case Variant::kNfcOnly:
    case Variant::kMean5Only:
      if (!spec.gcn_dims.empty()) throw UsageError("model: " + variant_name(spec.variant) + " has no GCN layers");
      if (!spec.classifier_affine) throw UsageError("model: " + variant_name(spec.variant) + " needs the classifier");
      break;
    case Variant::kGcnBaseline:
      if (spec.gcn_dims.empty() || spec.gcn_dims.back() != classes) {
        throw UsageError("model: GCN_BASELINE's last layer must have num_classes units");
      }
      break;
    case Variant::kNfcGcn:
      if (spec.gcn_dims.empty()) throw UsageError("model: NFC_GCN needs at least one GCN layer");
      if (!spec.classifier_affine && spec.gcn_dims.back() != classes) {
        throw UsageError("model: without a classifier layer the last GCN layer must have num_classes units");
      }
      break;
  }
  if (spec.uses_conv()) (void)spec.conv.geometry(feat_dim, spec.bandwidth);
}

std::size_t representation_width(const ModelSpec& spec, std::size_t feat_dim) {
  if (spec.uses_conv()) return spec.conv.geometry(feat_dim, spec.bandwidth).flat_size();
  return feat_dim;
}

namespace {

std::string conv_mode_name(ConvMode m) { return m == ConvMode::kConv1D ? "CONV1D" : "CONV2D"; }

ConvMode parse_conv_mode(const std::string& s) {
  if (s == "CONV1D") return ConvMode::kConv1D;
  if (s == "CONV2D") return ConvMode::kConv2D;
  throw UsageError("unknown convolution mode '" + s + "' (CONV1D, CONV2D)");
}

}  // namespace

nlohmann::json spec_to_json(const ModelSpec& spec) {
  return {
      {"variant", variant_name(spec.variant)},
      {"conv",
       {{"mode", conv_mode_name(spec.conv.mode)},
        {"k", spec.conv.k},
        {"width", spec.conv.width},
        {"stride_feat", spec.conv.stride_feat},
        {"stride_node", spec.conv.stride_node},
        {"filters", spec.conv.filters},
        {"bias", spec.conv.bias}}},
      {"gcn_dims", spec.gcn_dims},
      {"num_classes", spec.num_classes},
      {"dropout", spec.dropout},
      {"bandwidth", spec.bandwidth},
      {"classifier_affine", spec.classifier_affine},
      {"head_dropout", spec.head_dropout},
      {"aggregation", spec.aggregation == Aggregation::kMean ? "mean" : "symmetric"},
  };
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec s;
    s.variant = parse_variant(j.value("variant", std::string("NFC_GCN")));
    if (j.contains("conv")) {
      const auto& c = j.at("conv");
      s.conv.mode = parse_conv_mode(c.value("mode", std::string("CONV1D")));
      s.conv.k = c.value("k", std::size_t{1});
      s.conv.width = c.value("width", std::size_t{1});
      s.conv.stride_feat = c.value("stride_feat", std::size_t{1});
      s.conv.stride_node = c.value("stride_node", std::size_t{1});
      s.conv.filters = c.value("filters", std::size_t{1});
      s.conv.bias = c.value("bias", true);
    }
    s.gcn_dims = j.value("gcn_dims", std::vector<std::size_t>{});
    s.num_classes = j.value("num_classes", 0);
    s.dropout = j.value("dropout", 0.5);
    s.bandwidth = j.value("bandwidth", std::size_t{6});
    s.classifier_affine = j.value("classifier_affine", true);
    s.head_dropout = j.value("head_dropout", true);
    const auto agg = j.value("aggregation", std::string("mean"));
    if (agg == "mean") {
      s.aggregation = Aggregation::kMean;
    } else if (agg == "symmetric") {
      s.aggregation = Aggregation::kSymmetric;
    } else {
      throw UsageError("unknown aggregation '" + agg + "' (mean, symmetric)");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed model spec: ") + e.what());
  }
}

std::vector<ParamTensor*> ModelParams::list() {
  std::vector<ParamTensor*> out;
  for (ParamTensor* p : {&filters, &filter_bias}) {
    if (p->present()) out.push_back(p);
  }
  for (auto& w : gcn_weights) out.push_back(&w);
  for (ParamTensor* p : {&classifier, &classifier_bias}) {
    if (p->present()) out.push_back(p);
  }
  return out;
}

std::vector<const ParamTensor*> ModelParams::list() const {
  auto* self = const_cast<ModelParams*>(this);
  const auto mut = self->list();
  return {mut.begin(), mut.end()};
}

void ModelParams::zero_grad() {
  for (auto* p : list()) p->tensor.zero_grad();
}

ModelParams init_params(const ModelSpec& spec, std::size_t feat_dim, std::uint64_t seed) {
  validate_spec(spec, feat_dim);
  Rng rng(seed);
  ModelParams mp;
  if (spec.uses_conv()) {
    const auto shape = spec.conv.filter_shape(spec.bandwidth);
    mp.filters = {"filters", Tensor(shape), InitScheme::kGlorotUniform, true};
    const std::size_t k = shape[1];
    const std::size_t w = shape[2];
    if (spec.conv.mode == ConvMode::kConv1D) {
      glorot_uniform(mp.filters.tensor, k * w, k * shape[0], rng);
    } else {
      glorot_uniform(mp.filters.tensor, k * w, k * w * shape[0], rng);
    }
    if (spec.conv.bias) mp.filter_bias = {"filter_bias", Tensor({shape[0]}), InitScheme::kZeros, false};
  }
  std::size_t in = representation_width(spec, feat_dim);
  for (std::size_t l = 0; l < spec.gcn_dims.size(); ++l) {
    ParamTensor w{"gcn" + std::to_string(l + 1), Tensor({in, spec.gcn_dims[l]}), InitScheme::kGlorotUniform, true};
    glorot_uniform(w.tensor, in, spec.gcn_dims[l], rng);
    mp.gcn_weights.push_back(std::move(w));
    in = spec.gcn_dims[l];
  }
  if (spec.has_head()) {
    const auto classes = static_cast<std::size_t>(spec.num_classes);
    mp.classifier = {"classifier", Tensor({in, classes}), InitScheme::kGlorotUniform, true};
    glorot_uniform(mp.classifier.tensor, in, classes, rng);
    mp.classifier_bias = {"classifier_bias", Tensor({classes}), InitScheme::kZeros, false};
  }
  return mp;
}

ModelInputs make_inputs(const Graph& g, const ModelSpec& spec, std::uint64_t sample_seed) {
  ModelInputs in;
  in.graph = &g;
  const bool symmetric = spec.variant == Variant::kGcnBaseline || spec.aggregation == Aggregation::kSymmetric;
  in.propagate = symmetric ? normalize_adjacency(g) : mean_adjacency(g);
  in.propagate_t = in.propagate.transposed();
  if (spec.uses_conv()) in.sparse_features = kernels::SparseRows::from_dense(g.features());
  if (spec.uses_maps()) resample_maps(in, spec, sample_seed);
  in.sample_seed = sample_seed;
  return in;
}

void resample_maps(ModelInputs& in, const ModelSpec& spec, std::uint64_t sample_seed) {
  in.maps = sample_table(*in.graph, spec.bandwidth, sample_seed);
  in.sample_seed = sample_seed;
}

namespace {

Matrix weight_matrix(const ParamTensor& p) {
  return Matrix(p.tensor.shape[0], p.tensor.shape[1], p.tensor.values);
}

void relu_inplace(Matrix& m) {
  for (auto& v : m.values()) v = v > 0.0 ? v : 0.0;
}

// Last GCN layer feeds logits directly (no activation, no dropout after it).
bool last_layer_is_output(const ModelSpec& spec) { return !spec.has_head(); }

}  // namespace

ForwardCache model_forward(const ModelSpec& spec, const ModelParams& params, const ModelInputs& in, bool training,
                           Rng& rng) {
  ForwardCache cache;
  model_forward(spec, params, in, training, rng, cache);
  return cache;
}

void model_forward(const ModelSpec& spec, const ModelParams& params, const ModelInputs& in, bool training, Rng& rng,
                   ForwardCache& cache, bool inference_only) {
  const Graph& g = *in.graph;
  validate_spec(spec, g.num_features());
  if (inference_only && training) throw UsageError("model_forward: inference_only needs evaluation mode");
  cache.training = training;
  cache.min_abs_relu_input = std::numeric_limits<double>::infinity();
  const std::size_t depth = spec.depth();
  cache.activations.resize(depth + 1);
  cache.masks.resize(depth + 1);
  for (auto& m : cache.masks) m.keep.clear();

  const std::span<const double> conv_bias =
      params.filter_bias.present() ? std::span<const double>(params.filter_bias.tensor.values)
                                   : std::span<const double>{};
  // Folded path: the first consumer of H^(0) is applied inside the convolution.
  const bool fold = inference_only && spec.uses_conv();
  Matrix folded;
  if (fold) {
    const auto geo = spec.conv.geometry(g.num_features(), spec.bandwidth);
    const ParamTensor& first = depth > 0 ? params.gcn_weights[0] : params.classifier;
    k::conv_project(in.sparse_features, in.maps, geo, params.filters.tensor.values, conv_bias, weight_matrix(first),
                    folded);
    check_finite(folded.values(), "first-level representation");
    cache.activations[0] = Matrix();
  }

  Matrix& h0 = cache.activations[0];
  if (!fold) {
    switch (spec.variant) {
      case Variant::kNfcGcn:
      case Variant::kNfcOnly: {
        const auto geo = spec.conv.geometry(g.num_features(), spec.bandwidth);
        k::conv_forward(in.sparse_features, in.maps, geo, params.filters.tensor.values, conv_bias, h0);
        break;
      }
      case Variant::kMean5Only:
        k::neighborhood_mean(g.features(), in.maps, h0);
        break;
      case Variant::kGcnBaseline:
        h0 = g.features();
        break;
    }
    check_finite(h0.values(), "first-level representation");
  }

  auto drop = [&](std::size_t level) {
    Matrix& a = cache.activations[level];
    DropoutMask& m = cache.masks[level];
    if (training && spec.dropout > 0.0) {
      draw_dropout_mask(a.size(), spec.dropout, rng.next(), m);
      dropout_apply_inplace(a, m);
    }
  };

  Matrix t;
  for (std::size_t l = 0; l < depth; ++l) {
    if (fold && l == 0) {
      t = std::move(folded);
    } else {
      drop(l);
      k::gemm(cache.activations[l], weight_matrix(params.gcn_weights[l]), t);
    }
    Matrix& z = cache.activations[l + 1];
    k::spmm(in.propagate, t, z);
    const bool output = l + 1 == depth && last_layer_is_output(spec);
    if (!output) {
      for (double v : z.values()) cache.min_abs_relu_input = std::min(cache.min_abs_relu_input, std::abs(v));
      relu_inplace(z);
    }
    check_finite(z.values(), "GCN layer " + std::to_string(l + 1));
  }

  if (spec.has_head() && fold && depth == 0) {
    cache.logits = std::move(folded);
    const auto& b = params.classifier_bias.tensor.values;
    for (std::size_t i = 0; i < cache.logits.rows(); ++i) {
      auto row = cache.logits.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
    }
  } else if (spec.has_head()) {
    if (depth == 0 || spec.head_dropout) drop(depth);
    cache.logits = affine_forward(cache.activations[depth], params.classifier.tensor, &params.classifier_bias.tensor);
  } else {
    cache.logits = cache.activations[depth];
  }
  check_finite(cache.logits.values(), "logits");
}

double masked_loss(const Matrix& logits, const std::vector<int>& labels, std::span<const std::uint8_t> mask) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(i);
  }
  if (rows.empty()) return 0.0;
  Matrix sub(rows.size(), logits.cols());
  std::vector<int> y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(logits.row(rows[r]).begin(), logits.row(rows[r]).end(), sub.row(r).begin());
    y[r] = labels[rows[r]];
  }
  return softmax_cross_entropy(sub, y).loss / static_cast<double>(rows.size());
}

LossBreakdown model_backward(const ModelSpec& spec, ModelParams& params, const ModelInputs& in,
                             const ForwardCache& cache, std::span<const std::uint8_t> mask, double l2) {
  const Graph& g = *in.graph;
  const std::size_t depth = spec.depth();
  if (cache.activations.size() != depth + 1 || cache.logits.rows() != g.num_nodes() ||
      cache.logits.cols() != static_cast<std::size_t>(spec.num_classes)) {
    throw UsageError("model_backward: forward cache does not match the model spec");
  }
  if (mask.size() != g.num_nodes()) throw UsageError("model_backward: mask length does not match the graph");
  params.zero_grad();

  LossBreakdown loss;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(i);
  }
  Matrix dlogits(g.num_nodes(), cache.logits.cols());
  if (!rows.empty()) {
    Matrix sub(rows.size(), cache.logits.cols());
    std::vector<int> y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy(cache.logits.row(rows[r]).begin(), cache.logits.row(rows[r]).end(), sub.row(r).begin());
      y[r] = g.labels()[rows[r]];
    }
    auto sce = softmax_cross_entropy(sub, y);
    const double inv = 1.0 / static_cast<double>(rows.size());
    loss.data = sce.loss * inv;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto dst = dlogits.row(rows[r]);
      const auto src = sce.dlogits.row(r);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = src[j] * inv;
    }
  }

  // Gradient w.r.t. activations[depth] as stored (post-dropout when a head follows).
  Matrix grad;
  if (spec.has_head()) {
    grad = affine_backward(cache.activations[depth], params.classifier.tensor, &params.classifier_bias.tensor,
                           dlogits);
  } else {
    grad = std::move(dlogits);
  }

  for (std::size_t l = depth; l-- > 0;) {
    const bool output = l + 1 == depth && last_layer_is_output(spec);
    if (!output) {
      // dZ = dA * mask * scale * [A > 0]; A > 0 already implies the unit was kept.
      const Matrix& a = cache.activations[l + 1];
      const DropoutMask& m = cache.masks[l + 1];
      auto& gv = grad.values();
      for (std::size_t i = 0; i < gv.size(); ++i) {
        gv[i] = a.values()[i] > 0.0 ? gv[i] * (m.identity() ? 1.0 : m.scale) : 0.0;
      }
    }
    Matrix dt;
    k::spmm(in.propagate_t, grad, dt);
    auto& w = params.gcn_weights[l].tensor;
    Matrix dw(w.shape[0], w.shape[1], std::move(w.grad));
    k::gemm_tn_acc(cache.activations[l], dt, dw);
    w.grad = std::move(dw.values());
    if (l > 0) {
      k::gemm_nt(dt, weight_matrix(params.gcn_weights[l]), grad);
    } else if (spec.uses_conv()) {
      // Gradient w.r.t. the pre-dropout convolution output, computed only where units were kept.
      const DropoutMask& m0 = cache.masks[0];
      if (m0.identity()) {
        k::gemm_nt(dt, weight_matrix(params.gcn_weights[0]), cache.scratch);
      } else {
        k::gemm_nt_masked(dt, weight_matrix(params.gcn_weights[0]), m0.keep, m0.scale, cache.scratch);
      }
    }
  }

  if (spec.uses_conv()) {
    if (depth == 0) cache.scratch = dropout_backward(grad, cache.masks[0]);
    const auto geo = spec.conv.geometry(g.num_features(), spec.bandwidth);
    k::conv_backward(in.sparse_features, in.maps, geo, cache.scratch, params.filters.tensor.grad,
                     params.filter_bias.present() ? std::span<double>(params.filter_bias.tensor.grad)
                                                  : std::span<double>{});
  }

  const auto plist = params.list();
  loss.l2 = l2_penalty(plist, l2);
  for (const auto* p : plist) check_finite(p->tensor.grad, "gradient of " + p->name);
  return loss;
}

std::vector<int> predict(const Matrix& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels, std::span<const std::uint8_t> mask) {
  std::size_t total = 0;
  std::size_t correct = 0;
  const auto pred = predict(logits);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++total;
    if (pred[i] == labels[i]) ++correct;
  }
  if (total == 0) throw UsageError("accuracy over an empty mask");
  return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

constexpr const char* kCheckpointFormat = "nfcgcn-checkpoint";
constexpr int kCheckpointVersion = 1;

nlohmann::json tensor_json(const ParamTensor& p) {
  return {{"name", p.name}, {"shape", p.tensor.shape}, {"values", p.tensor.values}};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["spec"] = spec_to_json(ckpt.spec);
  j["feat_dim"] = ckpt.feat_dim;
  j["sample_seed"] = ckpt.sample_seed;
  j["tensors"] = nlohmann::json::array();
  for (const auto* p : ckpt.params.list()) j["tensors"].push_back(tensor_json(*p));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  if (j.value("format", std::string()) != kCheckpointFormat || j.value("version", 0) != kCheckpointVersion) {
    throw DataError("checkpoint " + path.string() + " has an unsupported format or version");
  }
  Checkpoint ck;
  ck.spec = spec_from_json(j.at("spec"));
  ck.feat_dim = j.at("feat_dim").get<std::size_t>();
  ck.sample_seed = j.at("sample_seed").get<std::uint64_t>();
  // The expected layout comes from a fresh initialization of the stored spec.
  ck.params = init_params(ck.spec, ck.feat_dim, 0);
  auto slots = ck.params.list();
  const auto& tensors = j.at("tensors");
  if (tensors.size() != slots.size()) {
    throw DataError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, spec implies " +
                    std::to_string(slots.size()));
  }
  for (std::size_t t = 0; t < slots.size(); ++t) {
    const auto& tj = tensors[t];
    auto& slot = *slots[t];
    const auto name = tj.at("name").get<std::string>();
    const auto shape = tj.at("shape").get<std::vector<std::size_t>>();
    if (name != slot.name || shape != slot.tensor.shape) {
      throw DataError("checkpoint tensor " + std::to_string(t) + " is " + name + " " + Tensor(shape).shape_string() +
                      ", expected " + slot.name + " " + slot.tensor.shape_string());
    }
    auto values = tj.at("values").get<std::vector<double>>();
    if (values.size() != slot.tensor.numel()) throw DataError("checkpoint tensor " + name + " has wrong value count");
    slot.tensor.values = std::move(values);
  }
  return ck;
}

}  // namespace nfcgcn
