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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nfcgcn/graph.hpp"
#include "nfcgcn/model.hpp"
#include "json.hpp"

namespace nfcgcn {

struct AdamConfig {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct RunConfig {
  AdamConfig adam;
  double l2 = 1e-4;
  std::size_t max_epochs = 200;
  // Stop after `patience` consecutive epochs without a validation-accuracy
  // improvement; nullopt disables early stopping.
  std::optional<std::size_t> patience = 30;
  std::uint64_t seed = 1;
  bool resample_per_epoch = false;
  ModelSpec model;
};

// Throws UsageError on invalid values.
void validate_config(const RunConfig& cfg);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t t = 0;
};

// One bias-corrected Adam update over params.list() (in that order), using
// the gradients currently stored in the parameters. Increments state.t first.
void adam_step(ModelParams& params, AdamState& state, const AdamConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct RunResult {
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  double test_acc = 0.0;
  std::vector<EpochRecord> curves;
  ModelParams best_params;
  std::uint64_t best_sample_seed = 0;  // maps the best parameters were evaluated on
  double wall_seconds = 0.0;
};

// Seeds derived from RunConfig::seed for each source of randomness.
std::uint64_t init_seed(std::uint64_t seed);
std::uint64_t sampling_seed(std::uint64_t seed, std::size_t epoch, bool per_epoch);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Full-batch training on the train mask; model selection on the val mask,
// test accuracy of the best-validation parameters. Throws NumericError
// naming the epoch when the loss diverges.
RunResult train(const Graph& g, const RunConfig& cfg, const EpochCallback& on_epoch = {});

// Accuracy of `params` on `mask` with maps drawn from `sample_seed`.
double evaluate(const Graph& g, const ModelSpec& spec, const ModelParams& params, std::uint64_t sample_seed,
                std::span<const std::uint8_t> mask);

inline constexpr const char* kCurvesHeader = "epoch,train_loss,val_loss,train_acc,val_acc";
void write_curves_csv(const std::vector<EpochRecord>& curves, const std::filesystem::path& path);
nlohmann::json summary_json(const RunResult& result, const RunConfig& cfg);

}  // namespace nfcgcn
