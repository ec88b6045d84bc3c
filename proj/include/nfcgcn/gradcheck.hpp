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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nfcgcn/graph.hpp"
#include "nfcgcn/model.hpp"
#include "json.hpp"

namespace nfcgcn {

// Central differences (f(theta + eps e_i) - f(theta - eps e_i)) / 2 eps for
// each coordinate in `coords` (all coordinates when empty). Throws
// NumericError if f returns a non-finite value.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double eps,
                                     std::span<const std::size_t> coords = {});

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  std::string label;
  double tolerance = 1e-4;
  std::vector<TensorCheck> tensors;
  bool pass = false;
  double seconds = 0.0;

  double max_rel_error() const;
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double eps = 1e-5;
  double l2 = 1e-4;
  std::size_t max_coords = 500;
  // Applied to the analytic gradients before comparison (negative controls).
  std::function<void(ModelParams&)> corrupt;
};

// Compares model_backward against finite differences of the training loss on
// `g`'s train mask. Rejects specs with dropout (the loss must be deterministic).
GradCheckReport check_model(const ModelSpec& spec, const Graph& g, std::uint64_t seed,
                            const GradCheckOptions& opts = {});

struct GradCheckInstance {
  std::string label;
  Graph graph;
  ModelSpec spec;
  std::uint64_t seed = 0;
};

// Seeded 12-node instance (D=9, F=3, n=3, k=3, s=2, c=2, K=2 where the variant
// has GCN layers), re-seeded until every ReLU input sits at least 1e-4 from
// the kink.
GradCheckInstance random_instance(Variant variant, std::uint64_t seed, ConvMode mode = ConvMode::kConv1D);

// The four variants plus the 2D-convolution and symmetric-aggregation forms of NFC_GCN.
std::vector<GradCheckInstance> standard_instances(std::uint64_t seed);

std::string format_report_table(const std::vector<GradCheckReport>& reports);
nlohmann::json report_json(const GradCheckReport& r);

}  // namespace nfcgcn
