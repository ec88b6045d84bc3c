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

#include "nfcgcn/presets.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>

#include "nfcgcn/error.hpp"

namespace nfcgcn {

namespace fs = std::filesystem;

fs::path default_preset_dir() {
  if (const char* env = std::getenv("NFCGCN_PRESETS")) return env;
  return NFCGCN_PRESET_DIR;
}

std::vector<std::string> list_presets(const fs::path& dir) {
  std::vector<std::string> names;
  if (!fs::is_directory(dir)) return names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

Preset load_preset(const std::string& name, const fs::path& dir) {
  const auto path = dir / (name + ".json");
  if (!fs::exists(path)) {
    std::string known;
    for (const auto& n : list_presets(dir)) known += (known.empty() ? "" : ", ") + n;
    throw UsageError("unknown preset '" + name + "'; available: " + known);
  }
  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("preset " + path.string() + " is not valid JSON: " + e.what());
  }
  Preset p;
  p.name = name;
  p.description = j.value("description", std::string());
  p.split = j.value("split", std::string());
  if (!j.contains("config")) throw UsageError("preset " + path.string() + " has no config object");
  p.config = config_to_json(config_from_json(j.at("config")));
  return p;
}

ModelSpec with_gcn_depth(ModelSpec spec, std::size_t depth) {
  if (depth == 0) {
    spec.gcn_dims.clear();
    return spec;
  }
  if (spec.gcn_dims.empty()) throw UsageError("cannot change depth of a model without GCN layers");
  const std::size_t hidden = spec.gcn_dims.front();
  const std::size_t last = spec.gcn_dims.back();
  spec.gcn_dims.assign(depth, hidden);
  spec.gcn_dims.back() = last;
  return spec;
}

nlohmann::json apply_overrides(nlohmann::json config, const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> seen;
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("override '" + ov + "' is not key=value");
    const std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    const auto [it, inserted] = seen.emplace(key, raw);
    if (!inserted && it->second != raw) {
      throw UsageError("conflicting overrides for '" + key + "': '" + it->second + "' and '" + raw + "'");
    }
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    if (key == "model.gcn_layers") {
      if (!value.is_number_unsigned()) throw UsageError("model.gcn_layers needs a non-negative integer");
      const auto spec = with_gcn_depth(spec_from_json(config.at("model")), value.get<std::size_t>());
      config["model"]["gcn_dims"] = spec.gcn_dims;
      continue;
    }
    nlohmann::json* node = &config;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object() || !node->contains(part)) throw UsageError("unknown config key '" + key + "'");
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    *node = value;
  }
  return config;
}

}  // namespace nfcgcn
