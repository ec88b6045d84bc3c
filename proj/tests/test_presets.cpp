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

#include "nfcgcn/error.hpp"
#include "nfcgcn/presets.hpp"

using namespace nfcgcn;

namespace {

const std::filesystem::path kDir = NFCGCN_PRESET_DIR;

RunConfig preset_config(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return config_from_json(apply_overrides(load_preset(name, kDir).config, overrides));
}

}  // namespace

TEST_CASE("shipped presets") {
  auto names = list_presets(kDir);
  for (const char* n : {"cora-1d", "cora-2d", "cora-gcn", "citeseer-1d", "citeseer-2d", "citeseer-gcn", "pubmed-1d",
                        "pubmed-2d", "pubmed-gcn"}) {
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
    CHECK_NOTHROW(validate_config(preset_config(n)));
  }
}

TEST_CASE("cora-1d encodes the published hyperparameters") {
  auto p = load_preset("cora-1d", kDir);
  CHECK(p.split == "cora-fastgcn");
  auto c = preset_config("cora-1d");
  CHECK(c.adam.lr == 0.002);
  CHECK(c.l2 == 1e-4);
  CHECK(c.max_epochs == 200);
  CHECK(c.model.variant == Variant::kNfcGcn);
  CHECK(c.model.bandwidth == 6);
  CHECK(c.model.conv.mode == ConvMode::kConv1D);
  CHECK(c.model.conv.k == 32);
  CHECK(c.model.conv.stride_feat == 16);
  CHECK(c.model.conv.filters == 64);
  CHECK(c.model.gcn_dims == std::vector<std::size_t>{16, 7});
  CHECK(c.model.num_classes == 7);
  CHECK(c.model.dropout == 0.5);
  CHECK(representation_width(c.model, 1433) == 5632);
}

TEST_CASE("citeseer and pubmed presets") {
  auto cs = preset_config("citeseer-1d");
  CHECK(cs.adam.lr == 0.002);
  CHECK(cs.model.conv.k == 64);
  CHECK(cs.model.conv.stride_feat == 32);
  CHECK(cs.model.gcn_dims == std::vector<std::size_t>{16, 6});
  auto pm = preset_config("pubmed-1d");
  CHECK(pm.adam.lr == 0.01);
  CHECK(pm.model.conv.k == 64);
  CHECK(pm.model.conv.stride_feat == 16);
  CHECK(pm.model.conv.filters == 32);
  CHECK(pm.model.gcn_dims == std::vector<std::size_t>{32, 3});
  auto two_d = preset_config("cora-2d");
  CHECK(two_d.model.conv.mode == ConvMode::kConv2D);
  CHECK(two_d.model.conv.width == 3);
}

TEST_CASE("gcn baseline presets") {
  auto g = preset_config("cora-gcn");
  CHECK(g.model.variant == Variant::kGcnBaseline);
  CHECK(g.adam.lr == 0.1);
  CHECK(g.max_epochs == 400);
  CHECK(g.patience == std::optional<std::size_t>(10));
  CHECK(g.model.gcn_dims == std::vector<std::size_t>{16, 7});
  CHECK(g.model.dropout == 0.5);
}

TEST_CASE("overrides") {
  auto c = preset_config("cora-1d", {"lr=0.01", "model.dropout=0.2", "patience=null", "model.conv.mode=CONV2D"});
  CHECK(c.adam.lr == 0.01);
  CHECK(c.model.dropout == 0.2);
  CHECK_FALSE(c.patience.has_value());
  CHECK(c.model.conv.mode == ConvMode::kConv2D);
  auto deep = preset_config("cora-1d", {"model.gcn_layers=5"});
  CHECK(deep.model.gcn_dims == std::vector<std::size_t>{16, 16, 16, 16, 7});
  CHECK(preset_config("cora-1d", {"seed=4", "seed=4"}).seed == 4);
  CHECK_THROWS_AS(preset_config("cora-1d", {"seed=4", "seed=5"}), UsageError);
  CHECK_THROWS_AS(preset_config("cora-1d", {"model.colour=red"}), UsageError);
  CHECK_THROWS_AS(preset_config("cora-1d", {"lr"}), UsageError);
}

TEST_CASE("gcn depth helper") {
  ModelSpec s;
  s.gcn_dims = {16, 7};
  CHECK(with_gcn_depth(s, 1).gcn_dims == std::vector<std::size_t>{7});
  CHECK(with_gcn_depth(s, 2).gcn_dims == std::vector<std::size_t>{16, 7});
  CHECK(with_gcn_depth(s, 3).gcn_dims == std::vector<std::size_t>{16, 16, 7});
}

TEST_CASE("unknown preset lists the available ones") {
  try {
    load_preset("cora-3d", kDir);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("cora-1d") != std::string::npos);
    CHECK(msg.find("pubmed-gcn") != std::string::npos);
  }
}
