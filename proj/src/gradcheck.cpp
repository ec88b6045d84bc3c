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

#include "nfcgcn/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nfcgcn/error.hpp"
#include "nfcgcn/rng.hpp"
#include "nfcgcn/trainer.hpp"

namespace nfcgcn {

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double eps, std::span<const std::size_t> coords) {
  if (!(eps > 0.0)) throw UsageError("finite differences need eps > 0");
  std::vector<double> x(theta.begin(), theta.end());
  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(x.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    coords = all;
  }
  std::vector<double> out;
  out.reserve(coords.size());
  for (std::size_t i : coords) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f(x);
    x[i] = saved - eps;
    const double down = f(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("non-finite loss while perturbing coordinate " + std::to_string(i));
    }
    out.push_back((up - down) / (2.0 * eps));
  }
  return out;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& t : tensors) m = std::max(m, t.max_rel_error);
  return m;
}

namespace {

std::vector<std::size_t> pick_coords(std::size_t n, std::size_t limit, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n <= limit) return idx;
  Rng rng(seed);
  for (std::size_t s = 0; s < limit; ++s) {
    const auto j = s + static_cast<std::size_t>(rng.below(n - s));
    std::swap(idx[s], idx[j]);
  }
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport check_model(const ModelSpec& spec, const Graph& g, std::uint64_t seed, const GradCheckOptions& opts) {
  if (spec.dropout != 0.0) throw UsageError("gradient check needs dropout disabled (the loss must be deterministic)");
  const auto start = std::chrono::steady_clock::now();
  GradCheckReport report;
  report.label = variant_name(spec.variant);
  report.tolerance = opts.tolerance;

  ModelParams params = init_params(spec, g.num_features(), init_seed(seed));
  const ModelInputs inputs = make_inputs(g, spec, sampling_seed(seed, 1, false));
  Rng rng(0);
  const auto cache = model_forward(spec, params, inputs, false, rng);
  model_backward(spec, params, inputs, cache, g.masks().train, opts.l2);
  if (opts.corrupt) opts.corrupt(params);

  auto loss_at = [&](ModelParams& p) {
    Rng r(0);
    const auto c = model_forward(spec, p, inputs, false, r);
    double l2 = 0.0;
    for (const auto* t : p.list()) {
      if (!t->is_weight) continue;
      for (double w : t->tensor.values) l2 += w * w;
    }
    return masked_loss(c.logits, g.labels(), g.masks().train) + opts.l2 * l2;
  };

  auto plist = params.list();
  for (std::size_t t = 0; t < plist.size(); ++t) {
    ParamTensor& target = *plist[t];
    const auto coords = pick_coords(target.tensor.numel(), opts.max_coords, derive_seed(seed, 100 + t));
    const std::vector<double> original = target.tensor.values;
    const auto numeric = finite_diff_grad(
        [&](std::span<const double> theta) {
          std::copy(theta.begin(), theta.end(), target.tensor.values.begin());
          return loss_at(params);
        },
        original, opts.eps, coords);
    target.tensor.values = original;

    TensorCheck tc;
    tc.name = target.name;
    tc.checked = coords.size();
    double sum = 0.0;
    for (std::size_t c = 0; c < coords.size(); ++c) {
      const double a = target.tensor.grad[coords[c]];
      const double e = relative_error(a, numeric[c]);
      sum += e;
      if (e > tc.max_rel_error || c == 0) {
        tc.max_rel_error = e;
        tc.worst_index = coords[c];
        tc.worst_analytic = a;
        tc.worst_numeric = numeric[c];
      }
    }
    tc.mean_rel_error = coords.empty() ? 0.0 : sum / static_cast<double>(coords.size());
    report.tensors.push_back(tc);
  }
  report.pass = report.max_rel_error() < opts.tolerance;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

constexpr std::size_t kNodes = 12;
constexpr std::size_t kFeatures = 9;
constexpr int kClasses = 3;

Graph instance_graph(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  // Node 0 is a hub with degree above n-1; node 11 stays isolated.
  for (NodeId j = 1; j <= 5; ++j) edges.emplace_back(0, j);
  for (NodeId a = 1; a < kNodes - 1; ++a) {
    for (NodeId b = a + 1; b < kNodes - 1; ++b) {
      if (rng.uniform() < 0.2) edges.emplace_back(a, b);
    }
  }
  Matrix x(kNodes, kFeatures);
  for (auto& v : x.values()) v = 2.0 * rng.uniform() - 1.0;
  std::vector<int> labels(kNodes);
  for (auto& y : labels) y = static_cast<int>(rng.below(kClasses));
  Masks m = Masks::empty(kNodes);
  for (std::size_t i = 0; i < 8; ++i) m.train[i] = 1;
  m.val[8] = m.val[9] = 1;
  m.test[10] = m.test[11] = 1;
  return build_graph(kNodes, edges, std::move(x), std::move(labels), std::move(m), kClasses);
}

ModelSpec instance_spec(Variant variant, ConvMode mode) {
  ModelSpec s;
  s.variant = variant;
  s.num_classes = kClasses;
  s.dropout = 0.0;
  s.bandwidth = 3;
  s.conv.mode = mode;
  s.conv.k = 3;
  s.conv.stride_feat = 2;
  s.conv.filters = 2;
  s.conv.width = 2;
  s.conv.stride_node = 1;
  switch (variant) {
    case Variant::kNfcGcn: s.gcn_dims = {5, 4}; break;
    case Variant::kGcnBaseline: s.gcn_dims = {5, static_cast<std::size_t>(kClasses)}; break;
    case Variant::kNfcOnly:
    case Variant::kMean5Only: break;
  }
  return s;
}

}  // namespace

GradCheckInstance random_instance(Variant variant, std::uint64_t seed, ConvMode mode) {
  GradCheckInstance inst;
  inst.spec = instance_spec(variant, mode);
  inst.label = variant_name(variant);
  if (variant == Variant::kNfcGcn || variant == Variant::kNfcOnly) {
    inst.label += mode == ConvMode::kConv1D ? " (1D)" : " (2D)";
  }
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    inst.seed = derive_seed(seed, attempt);
    inst.graph = instance_graph(inst.seed);
    const auto params = init_params(inst.spec, kFeatures, init_seed(inst.seed));
    const auto inputs = make_inputs(inst.graph, inst.spec, sampling_seed(inst.seed, 1, false));
    Rng rng(0);
    const auto cache = model_forward(inst.spec, params, inputs, false, rng);
    if (cache.min_abs_relu_input >= 1e-4) return inst;
  }
  throw NumericError("could not draw a kink-free gradient-check instance");
}

std::vector<GradCheckInstance> standard_instances(std::uint64_t seed) {
  std::vector<GradCheckInstance> out;
  out.push_back(random_instance(Variant::kNfcGcn, seed));
  out.push_back(random_instance(Variant::kGcnBaseline, seed));
  out.push_back(random_instance(Variant::kNfcOnly, seed));
  out.push_back(random_instance(Variant::kMean5Only, seed));
  out.push_back(random_instance(Variant::kNfcGcn, seed, ConvMode::kConv2D));
  auto sym = random_instance(Variant::kNfcGcn, seed);
  sym.spec.aggregation = Aggregation::kSymmetric;
  sym.label = "NFC_GCN (symmetric)";
  out.push_back(std::move(sym));
  return out;
}

std::string format_report_table(const std::vector<GradCheckReport>& reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %-16s %8s %12s %12s %8s  %s\n", "model", "tensor", "coords", "max_rel",
                "mean_rel", "worst", "status");
  os << line;
  for (const auto& r : reports) {
    for (const auto& t : r.tensors) {
      std::snprintf(line, sizeof(line), "%-24s %-16s %8zu %12.3e %12.3e %8zu  %s\n", r.label.c_str(), t.name.c_str(),
                    t.checked, t.max_rel_error, t.mean_rel_error, t.worst_index,
                    t.max_rel_error < r.tolerance ? "ok" : "FAIL");
      os << line;
    }
  }
  return os.str();
}

nlohmann::json report_json(const GradCheckReport& r) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : r.tensors) {
    tensors.push_back({{"name", t.name},
                       {"checked", t.checked},
                       {"max_rel_error", t.max_rel_error},
                       {"mean_rel_error", t.mean_rel_error},
                       {"worst_index", t.worst_index},
                       {"worst_analytic", t.worst_analytic},
                       {"worst_numeric", t.worst_numeric}});
  }
  return {{"label", r.label},
          {"tolerance", r.tolerance},
          {"pass", r.pass},
          {"max_rel_error", r.max_rel_error()},
          {"seconds", r.seconds},
          {"tensors", tensors}};
}

}  // namespace nfcgcn
