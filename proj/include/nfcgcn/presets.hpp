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

#include <filesystem>
#include <string>
#include <vector>

#include "nfcgcn/trainer.hpp"
#include "json.hpp"

namespace nfcgcn {

// A shipped training preset: presets/<name>.json holding a run config plus
// the split preset it was designed for.
struct Preset {
  std::string name;
  std::string description;
  std::string split;
  nlohmann::json config;  // RunConfig JSON before overrides
};

std::filesystem::path default_preset_dir();
std::vector<std::string> list_presets(const std::filesystem::path& dir);
// Throws UsageError listing the available presets when `name` is unknown.
Preset load_preset(const std::string& name, const std::filesystem::path& dir);

// Applies `key=value` overrides (dotted paths into the config JSON; values
// parsed as JSON, falling back to a string). `model.gcn_layers=K` rebuilds
// gcn_dims at depth K. Unknown keys and a key given twice with different
// values raise UsageError.
nlohmann::json apply_overrides(nlohmann::json config, const std::vector<std::string>& overrides);

// gcn_dims at depth K: K-1 hidden layers of the current first width, then
// the current last width.
ModelSpec with_gcn_depth(ModelSpec spec, std::size_t depth);

}  // namespace nfcgcn
