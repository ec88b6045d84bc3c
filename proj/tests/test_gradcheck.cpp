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

#include <chrono>
#include <cmath>

#include "nfcgcn/error.hpp"
#include "nfcgcn/gradcheck.hpp"
#include "nfcgcn/trainer.hpp"

using namespace nfcgcn;

TEST_CASE("finite differences of simple functions") {
  std::vector<double> theta{3.0};
  auto sq = finite_diff_grad([](std::span<const double> t) { return t[0] * t[0]; }, theta, 1e-5);
  CHECK(std::abs(sq[0] - 6.0) < 1e-9);
  std::vector<double> one{1.0};
  auto relu = finite_diff_grad([](std::span<const double> t) { return std::max(t[0], 0.0); }, one, 1e-5);
  CHECK(std::abs(relu[0] - 1.0) < 1e-9);

  std::vector<double> two{1.0, 2.0};
  std::vector<std::size_t> only{1};
  auto partial = finite_diff_grad([](std::span<const double> t) { return t[0] * t[1]; }, two, 1e-5, only);
  REQUIRE(partial.size() == 1);
  CHECK(partial[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(finite_diff_grad([](std::span<const double>) { return NAN; }, one, 1e-5), NumericError);
}

TEST_CASE("relative error") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1e-12, 0.0) == doctest::Approx(1e-4));
}

TEST_CASE("every standard instance passes") {
  const auto start = std::chrono::steady_clock::now();
  auto instances = standard_instances(7);
  CHECK(instances.size() == 6);
  std::vector<GradCheckReport> reports;
  for (const auto& inst : instances) {
    CAPTURE(inst.label);
    CHECK(inst.graph.num_nodes() == 12);
    CHECK(inst.graph.num_features() == 9);
    auto rep = check_model(inst.spec, inst.graph, inst.seed);
    CHECK(rep.pass);
    CHECK(rep.max_rel_error() < 1e-4);
    reports.push_back(rep);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 120.0);
  auto table = format_report_table(reports);
  CHECK(table.find("NFC_ONLY") != std::string::npos);
  CHECK(report_json(reports.front()).at("pass") == true);
}

TEST_CASE("a corrupted backward pass is caught") {
  auto inst = random_instance(Variant::kNfcGcn, 3);
  GradCheckOptions opts;
  opts.corrupt = [](ModelParams& p) {
    auto& g = p.gcn_weights[0].tensor.grad;
    for (auto& v : g) v = -v;
  };
  auto rep = check_model(inst.spec, inst.graph, inst.seed, opts);
  CHECK_FALSE(rep.pass);
  bool flagged = false;
  for (const auto& t : rep.tensors) {
    if (t.name == "gcn1") {
      flagged = t.max_rel_error > 1.0;
      CHECK(t.worst_analytic == doctest::Approx(-t.worst_numeric).epsilon(1e-3));
    }
  }
  CHECK(flagged);
}

TEST_CASE("instances stay away from relu kinks") {
  for (auto v : {Variant::kNfcGcn, Variant::kGcnBaseline, Variant::kNfcOnly, Variant::kMean5Only}) {
    auto inst = random_instance(v, 11);
    auto params = init_params(inst.spec, inst.graph.num_features(), init_seed(inst.seed));
    auto inputs = make_inputs(inst.graph, inst.spec, sampling_seed(inst.seed, 1, false));
    Rng rng(0);
    CHECK(model_forward(inst.spec, params, inputs, false, rng).min_abs_relu_input >= 1e-4);
    CHECK(inst.spec.dropout == 0.0);
    CHECK(inst.spec.bandwidth == 3);
  }
  auto two_d = random_instance(Variant::kNfcGcn, 5, ConvMode::kConv2D);
  CHECK(two_d.spec.conv.mode == ConvMode::kConv2D);
  CHECK(check_model(two_d.spec, two_d.graph, two_d.seed).pass);
}

TEST_CASE("dropout specs are rejected") {
  auto inst = random_instance(Variant::kNfcOnly, 2);
  inst.spec.dropout = 0.5;
  CHECK_THROWS_AS(check_model(inst.spec, inst.graph, inst.seed), UsageError);
}
