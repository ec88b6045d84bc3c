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

#include "nfcgcn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "nfcgcn/error.hpp"
#include "nfcgcn/rng.hpp"

namespace nfcgcn {

void validate_config(const RunConfig& cfg) {
  if (!(cfg.adam.lr >= 0.0)) throw UsageError("lr must be non-negative");
  if (!(cfg.adam.beta1 >= 0.0 && cfg.adam.beta1 < 1.0 && cfg.adam.beta2 >= 0.0 && cfg.adam.beta2 < 1.0)) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  if (!(cfg.adam.eps > 0.0)) throw UsageError("Adam eps must be positive");
  if (!(cfg.l2 >= 0.0)) throw UsageError("l2 must be non-negative");
  if (cfg.max_epochs == 0) throw UsageError("max_epochs must be positive");
  if (cfg.patience && *cfg.patience > cfg.max_epochs) throw UsageError("patience must not exceed max_epochs");
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j = {
      {"lr", cfg.adam.lr},
      {"beta1", cfg.adam.beta1},
      {"beta2", cfg.adam.beta2},
      {"eps", cfg.adam.eps},
      {"l2", cfg.l2},
      {"max_epochs", cfg.max_epochs},
      {"seed", cfg.seed},
      {"resample_per_epoch", cfg.resample_per_epoch},
      {"model", spec_to_json(cfg.model)},
  };
  j["patience"] = cfg.patience ? nlohmann::json(*cfg.patience) : nlohmann::json(nullptr);
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  try {
    RunConfig c;
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.eps = j.value("eps", c.adam.eps);
    c.l2 = j.value("l2", c.l2);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    if (j.contains("patience")) {
      c.patience = j.at("patience").is_null() ? std::nullopt : std::optional(j.at("patience").get<std::size_t>());
    }
    c.seed = j.value("seed", c.seed);
    c.resample_per_epoch = j.value("resample_per_epoch", false);
    if (j.contains("model")) c.model = spec_from_json(j.at("model"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed run config: ") + e.what());
  }
}

void adam_step(ModelParams& params, AdamState& state, const AdamConfig& cfg) {
  auto plist = params.list();
  if (state.m.size() != plist.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto* p : plist) {
      state.m.emplace_back(p->tensor.numel(), 0.0);
      state.v.emplace_back(p->tensor.numel(), 0.0);
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < plist.size(); ++p) {
    auto& t = plist[p]->tensor;
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double g = t.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      t.values[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

std::uint64_t init_seed(std::uint64_t seed) { return derive_seed(seed, 1); }

std::uint64_t sampling_seed(std::uint64_t seed, std::size_t epoch, bool per_epoch) {
  const auto base = derive_seed(seed, 2);
  return per_epoch ? derive_seed(base, epoch) : base;
}

namespace {

void require_mask(std::span<const std::uint8_t> mask, const char* name) {
  if (mask_count(mask) == 0) throw UsageError(std::string("training needs a non-empty ") + name + " mask");
}

}  // namespace

RunResult train(const Graph& g, const RunConfig& cfg, const EpochCallback& on_epoch) {
  validate_config(cfg);
  validate_spec(cfg.model, g.num_features());
  if (cfg.model.num_classes != g.num_classes()) {
    throw UsageError("model has " + std::to_string(cfg.model.num_classes) + " classes, dataset has " +
                     std::to_string(g.num_classes()));
  }
  require_mask(g.masks().train, "train");
  require_mask(g.masks().val, "val");
  require_mask(g.masks().test, "test");

  const auto start = std::chrono::steady_clock::now();
  const ModelSpec& spec = cfg.model;
  RunResult result;
  ModelParams params = init_params(spec, g.num_features(), init_seed(cfg.seed));
  ModelInputs inputs = make_inputs(g, spec, sampling_seed(cfg.seed, 1, cfg.resample_per_epoch));
  Rng dropout_rng(derive_seed(cfg.seed, 3));
  AdamState adam;
  double best_val = -1.0;
  std::size_t since_best = 0;
  ForwardCache cache;
  ForwardCache eval;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      if (cfg.resample_per_epoch && epoch > 1 && spec.uses_maps()) {
        resample_maps(inputs, spec, sampling_seed(cfg.seed, epoch, true));
      }
      model_forward(spec, params, inputs, true, dropout_rng, cache);
      const LossBreakdown loss = model_backward(spec, params, inputs, cache, g.masks().train, cfg.l2);
      if (!std::isfinite(loss.total())) throw NumericError("loss is not finite");
      rec.train_loss = loss.data;
      rec.train_acc = accuracy(cache.logits, g.labels(), g.masks().train);
      adam_step(params, adam, cfg.adam);

      model_forward(spec, params, inputs, false, dropout_rng, eval, true);
      rec.val_loss = masked_loss(eval.logits, g.labels(), g.masks().val);
      rec.val_acc = accuracy(eval.logits, g.labels(), g.masks().val);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    result.curves.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_acc > best_val) {
      best_val = rec.val_acc;
      result.best_epoch = epoch;
      result.best_val_acc = rec.val_acc;
      result.best_params = params;
      result.best_sample_seed = inputs.sample_seed;
      since_best = 0;
    } else if (cfg.patience && ++since_best > *cfg.patience) {
      break;
    }
  }

  if (spec.uses_maps() && inputs.sample_seed != result.best_sample_seed) {
    resample_maps(inputs, spec, result.best_sample_seed);
  }
  cache = ForwardCache();
  model_forward(spec, result.best_params, inputs, false, dropout_rng, eval, true);
  result.test_acc = accuracy(eval.logits, g.labels(), g.masks().test);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

double evaluate(const Graph& g, const ModelSpec& spec, const ModelParams& params, std::uint64_t sample_seed,
                std::span<const std::uint8_t> mask) {
  if (mask_count(mask) == 0) throw UsageError("evaluation mask is empty");
  const ModelInputs inputs = make_inputs(g, spec, sample_seed);
  Rng unused(0);
  ForwardCache cache;
  model_forward(spec, params, inputs, false, unused, cache, true);
  return accuracy(cache.logits, g.labels(), mask);
}

void write_curves_csv(const std::vector<EpochRecord>& curves, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << kCurvesHeader << '\n';
  out.precision(17);
  for (const auto& r : curves) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.train_acc << ',' << r.val_acc << '\n';
  }
}

nlohmann::json summary_json(const RunResult& result, const RunConfig& cfg) {
  return {
      {"best_epoch", result.best_epoch},
      {"best_val_acc", result.best_val_acc},
      {"test_acc", result.test_acc},
      {"epochs_run", result.curves.size()},
      {"wall_seconds", result.wall_seconds},
      {"config", config_to_json(cfg)},
  };
}

}  // namespace nfcgcn
