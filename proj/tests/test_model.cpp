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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "nfcgcn/dataset_io.hpp"
#include "nfcgcn/error.hpp"
#include "nfcgcn/model.hpp"
#include "support.hpp"

using namespace nfcgcn;
using testsupport::max_abs_diff;

namespace {

ModelSpec small_spec(Variant v, std::size_t classes) {
  ModelSpec s;
  s.variant = v;
  s.conv = {ConvMode::kConv1D, 3, 1, 2, 1, 2, true};
  s.num_classes = static_cast<int>(classes);
  s.bandwidth = 3;
  s.dropout = 0.0;
  switch (v) {
    case Variant::kNfcGcn: s.gcn_dims = {5, 4}; break;
    case Variant::kGcnBaseline:
      s.gcn_dims = {5, classes};
      s.classifier_affine = false;
      s.aggregation = Aggregation::kSymmetric;
      break;
    default: break;
  }
  return s;
}

std::vector<ModelSpec> all_specs(std::size_t classes) {
  std::vector<ModelSpec> specs;
  for (auto v : {Variant::kNfcGcn, Variant::kGcnBaseline, Variant::kNfcOnly, Variant::kMean5Only}) {
    specs.push_back(small_spec(v, classes));
  }
  auto two_d = small_spec(Variant::kNfcGcn, classes);
  two_d.conv = {ConvMode::kConv2D, 3, 2, 2, 1, 2, true};
  specs.push_back(two_d);
  auto sym = small_spec(Variant::kNfcGcn, classes);
  sym.aggregation = Aggregation::kSymmetric;
  specs.push_back(sym);
  auto no_head = small_spec(Variant::kNfcGcn, classes);
  no_head.classifier_affine = false;
  no_head.gcn_dims = {5, classes};
  specs.push_back(no_head);
  auto one_layer = small_spec(Variant::kNfcGcn, classes);
  one_layer.gcn_dims = {6};
  specs.push_back(one_layer);
  return specs;
}

}  // namespace

TEST_CASE("cora shape contract") {
  auto dir = testsupport::cora_raw_dir();
  auto g = parse_linqs(dir / "cora.content", dir / "cora.cites").graph;
  ModelSpec spec;
  spec.conv = {ConvMode::kConv1D, 32, 6, 16, 1, 64, true};
  spec.gcn_dims = {16, 7};
  spec.num_classes = 7;
  spec.bandwidth = 6;
  CHECK(representation_width(spec, 1433) == 5632);
  auto params = init_params(spec, 1433, 1);
  CHECK(params.filters.tensor.shape == std::vector<std::size_t>{64, 32, 6});
  CHECK(params.gcn_weights[0].tensor.shape == std::vector<std::size_t>{5632, 16});
  CHECK(params.gcn_weights[1].tensor.shape == std::vector<std::size_t>{16, 7});
  CHECK(params.classifier.tensor.shape == std::vector<std::size_t>{7, 7});
  auto in = make_inputs(g, spec, 2);
  Rng rng(3);
  auto cache = model_forward(spec, params, in, true, rng);
  CHECK(cache.activations[0].rows() == 2708);
  CHECK(cache.activations[0].cols() == 5632);
  CHECK(cache.activations[1].cols() == 16);
  CHECK(cache.activations[2].cols() == 7);
  CHECK(cache.logits.rows() == 2708);
  CHECK(cache.logits.cols() == 7);
}

TEST_CASE("hand-evaluated forward pass") {
  // Nodes 0-1 connected, node 2 isolated; D=2, n=2, one 1x2 filter, one GCN layer.
  Matrix x(3, 2, {1, 0, 0, 2, 3, 1});
  auto g = build_graph(3, std::vector<Edge>{{0, 1}}, x, {0, 1, 0});
  ModelSpec spec;
  spec.conv = {ConvMode::kConv1D, 1, 1, 1, 1, 1, true};
  spec.gcn_dims = {2};
  spec.num_classes = 2;
  spec.bandwidth = 2;
  spec.dropout = 0.0;
  auto p = init_params(spec, 2, 1);
  p.filters.tensor.values = {1.0, 0.5};
  p.filter_bias.tensor.values = {0.0};
  p.gcn_weights[0].tensor.values = {1, 0, 0, 1};
  p.classifier.tensor.values = {1, -1, 2, 0};
  p.classifier_bias.tensor.values = {0.1, 0.0};
  auto in = make_inputs(g, spec, 1);
  Rng rng(1);
  auto c = model_forward(spec, p, in, false, rng);
  // H0: node0 = x0 + 0.5 x1 = [1, 1]; node1 = x1 + 0.5 x0 = [0.5, 2]; node2 = 1.5 x2 = [4.5, 1.5]
  CHECK(c.activations[0] == Matrix(3, 2, {1, 1, 0.5, 2, 4.5, 1.5}));
  // mean over {0,1} = [0.75, 1.5]; the isolated node keeps its own row
  CHECK(max_abs_diff(c.activations[1], Matrix(3, 2, {0.75, 1.5, 0.75, 1.5, 4.5, 1.5})) < 1e-15);
  CHECK(max_abs_diff(c.logits, Matrix(3, 2, {3.85, -0.75, 3.85, -0.75, 7.6, -4.5})) < 1e-14);
}

TEST_CASE("inference path equals the full evaluation forward") {
  auto g = testsupport::random_graph(25, 9, 3, 40, 5);
  for (const auto& spec : all_specs(3)) {
    CAPTURE(variant_name(spec.variant));
    auto p = init_params(spec, 9, 4);
    if (p.filter_bias.present()) p.filter_bias.tensor.values = {0.3, -0.2};
    auto in = make_inputs(g, spec, 6);
    Rng rng(1);
    auto full = model_forward(spec, p, in, false, rng);
    ForwardCache fast;
    model_forward(spec, p, in, false, rng, fast, true);
    CHECK(max_abs_diff(full.logits, fast.logits) < 1e-12);
    CHECK_THROWS_AS(model_forward(spec, p, in, true, rng, fast, true), UsageError);
  }
}

TEST_CASE("mean aggregation is identity on an isolated node") {
  auto g = build_graph(1, {}, Matrix(1, 4, {1, 2, 3, 4}), {0});
  ModelSpec spec = small_spec(Variant::kNfcGcn, 2);
  spec.gcn_dims = {3};
  auto p = init_params(spec, 4, 2);
  auto in = make_inputs(g, spec, 1);
  Rng rng(1);
  auto c = model_forward(spec, p, in, false, rng);
  Matrix pre;
  kernels::serial::gemm(c.activations[0], Matrix(p.gcn_weights[0].tensor.shape[0], 3, p.gcn_weights[0].tensor.values),
                        pre);
  for (std::size_t j = 0; j < 3; ++j) CHECK(c.activations[1](0, j) == doctest::Approx(std::max(pre(0, j), 0.0)));
}

TEST_CASE("edge order does not change the output") {
  auto g = testsupport::random_graph(20, 9, 3, 35, 2);
  auto edges = g.edges();
  std::reverse(edges.begin(), edges.end());
  for (auto& e : edges) std::swap(e.first, e.second);
  auto h = build_graph(20, edges, g.features(), g.labels(), g.masks(), 3);
  for (const auto& spec : all_specs(3)) {
    auto p = init_params(spec, 9, 1);
    Rng r1(1), r2(1);
    auto a = model_forward(spec, p, make_inputs(g, spec, 3), false, r1);
    auto b = model_forward(spec, p, make_inputs(h, spec, 3), false, r2);
    CHECK(a.logits == b.logits);
  }
}

TEST_CASE("predict and accuracy") {
  CHECK(predict(Matrix(1, 3, {0.1, 0.9, 0.0})) == std::vector<int>{1});
  CHECK(predict(Matrix(1, 2, {0.5, 0.5})) == std::vector<int>{0});
  Matrix l(3, 2, {1, 0, 0, 1, 1, 0});
  std::vector<std::uint8_t> all{1, 1, 1}, one{0, 1, 0}, none{0, 0, 0};
  CHECK(accuracy(l, {0, 1, 0}, all) == 1.0);
  CHECK(accuracy(l, {0, 0, 1}, all) == doctest::Approx(1.0 / 3));
  const double single = accuracy(l, {0, 0, 0}, one);
  CHECK((single == 0.0 || single == 1.0));
  CHECK_THROWS_AS(accuracy(l, {0, 1, 0}, none), UsageError);
}

TEST_CASE("random initialization predicts at chance") {
  auto g = testsupport::random_graph(80, 9, 4, 120, 9);
  auto spec = small_spec(Variant::kNfcGcn, 4);
  double total = 0.0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    auto p = init_params(spec, 9, static_cast<std::uint64_t>(s));
    Rng rng(1);
    auto c = model_forward(spec, p, make_inputs(g, spec, static_cast<std::uint64_t>(s)), false, rng);
    std::vector<std::uint8_t> all(80, 1);
    total += accuracy(c.logits, g.labels(), all);
  }
  CHECK(std::abs(total / seeds - 0.25) < 0.05);
}

TEST_CASE("empty mask gives zero data gradients") {
  auto g = testsupport::random_graph(15, 9, 3, 20, 3);
  for (const auto& spec : all_specs(3)) {
    auto p = init_params(spec, 9, 2);
    auto in = make_inputs(g, spec, 1);
    Rng rng(1);
    auto c = model_forward(spec, p, in, true, rng);
    std::vector<std::uint8_t> none(15, 0);
    auto loss = model_backward(spec, p, in, c, none, 0.0);
    CHECK(loss.data == 0.0);
    for (const auto* t : p.list())
      for (double v : t->tensor.grad) CHECK(v == 0.0);
  }
}

TEST_CASE("backward is deterministic without dropout") {
  auto g = testsupport::random_graph(15, 9, 3, 20, 3);
  for (const auto& spec : all_specs(3)) {
    auto p = init_params(spec, 9, 2);
    auto in = make_inputs(g, spec, 1);
    Rng r1(1), r2(2);
    auto c1 = model_forward(spec, p, in, true, r1);
    auto c2 = model_forward(spec, p, in, true, r2);
    model_backward(spec, p, in, c1, g.masks().train, 1e-4);
    std::vector<std::vector<double>> first;
    for (const auto* t : p.list()) first.push_back(t->tensor.grad);
    model_backward(spec, p, in, c2, g.masks().train, 1e-4);
    std::size_t i = 0;
    for (const auto* t : p.list()) CHECK(t->tensor.grad == first[i++]);
  }
}

TEST_CASE("bandwidth one uses the center only") {
  auto g = testsupport::random_graph(12, 9, 3, 20, 4);
  auto spec = small_spec(Variant::kMean5Only, 3);
  spec.bandwidth = 1;
  auto p = init_params(spec, 9, 1);
  auto in = make_inputs(g, spec, 1);
  Rng rng(1);
  auto c = model_forward(spec, p, in, false, rng);
  CHECK(c.activations[0] == g.features());
  auto conv = small_spec(Variant::kNfcGcn, 3);
  conv.bandwidth = 1;
  auto pc = init_params(conv, 9, 1);
  CHECK(pc.filters.tensor.shape == std::vector<std::size_t>{2, 3, 1});
  CHECK_NOTHROW(model_forward(conv, pc, make_inputs(g, conv, 1), true, rng));
}

TEST_CASE("spec validation and JSON") {
  for (const auto& spec : all_specs(3)) {
    auto back = spec_from_json(spec_to_json(spec));
    CHECK(spec_to_json(back) == spec_to_json(spec));
  }
  auto bad = small_spec(Variant::kNfcOnly, 3);
  bad.gcn_dims = {4};
  CHECK_THROWS_AS(validate_spec(bad, 9), UsageError);
  auto base = small_spec(Variant::kGcnBaseline, 3);
  base.gcn_dims = {5, 4};
  CHECK_THROWS_AS(validate_spec(base, 9), UsageError);
  auto big_k = small_spec(Variant::kNfcGcn, 3);
  big_k.conv.k = 10;
  CHECK_THROWS_AS(validate_spec(big_k, 9), UsageError);
  CHECK_THROWS_AS(parse_variant("GAT"), UsageError);
  CHECK_THROWS_AS(spec_from_json({{"aggregation", "max"}}), UsageError);
  CHECK_THROWS_AS(spec_from_json({{"gcn_dims", "wide"}}), UsageError);
}

TEST_CASE("checkpoint round trip and rejection") {
  auto dir = testsupport::fresh_dir("ckpt");
  for (const auto& spec : all_specs(3)) {
    Checkpoint ck{spec, 9, 42, init_params(spec, 9, 5)};
    save_checkpoint(dir / "a.json", ck);
    auto back = load_checkpoint(dir / "a.json");
    CHECK(back.sample_seed == 42);
    CHECK(back.feat_dim == 9);
    CHECK(spec_to_json(back.spec) == spec_to_json(spec));
    auto a = ck.params.list();
    auto b = back.params.list();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->tensor.values == b[i]->tensor.values);
  }
  {
    std::ofstream(dir / "junk.json") << "{not json";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.json"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "absent.json"), DataError);

  auto spec = small_spec(Variant::kNfcGcn, 3);
  save_checkpoint(dir / "b.json", {spec, 9, 1, init_params(spec, 9, 5)});
  nlohmann::json j;
  std::ifstream(dir / "b.json") >> j;
  j["tensors"][2]["shape"] = {4, 5};
  std::ofstream(dir / "c.json") << j.dump();
  CHECK_THROWS_AS(load_checkpoint(dir / "c.json"), DataError);
  j["version"] = 99;
  std::ofstream(dir / "d.json") << j.dump();
  CHECK_THROWS_AS(load_checkpoint(dir / "d.json"), DataError);
}
