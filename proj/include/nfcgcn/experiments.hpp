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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nfcgcn/trainer.hpp"

namespace nfcgcn {

struct GridRun {
  std::string label;
  RunConfig config;
};

struct GridOutcome {
  std::string label;
  RunConfig config;
  RunResult result;
};

// Trains every grid point. With jobs > 1 the points run concurrently on
// worker threads (one kernel thread each); outcomes keep grid order, and the
// numbers do not depend on `jobs`.
std::vector<GridOutcome> run_grid(const Graph& g, const std::vector<GridRun>& grid, std::size_t jobs = 1);

struct SeedStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
  std::vector<double> per_seed;
};

SeedStats seed_stats(const std::vector<double>& values);

struct MainResult {
  SeedStats test_acc;
  std::vector<GridOutcome> runs;
};

// Seeds cfg.seed, cfg.seed+1, ..., cfg.seed+repeats-1.
std::vector<GridRun> seed_grid(const std::string& label, const RunConfig& cfg, std::size_t repeats);
MainResult summarize(std::vector<GridOutcome> runs);

MainResult run_main(const Graph& g, const RunConfig& cfg, std::size_t repeats = 10, std::size_t jobs = 1);

struct AblationResult {
  MainResult nfc_only;
  MainResult mean5_only;
  double gap() const { return nfc_only.test_acc.mean - mean5_only.test_acc.mean; }
};

// Drops the GCN layers of `cfg.model` and compares the convolution against
// the plain neighborhood mean, both at bandwidth 6.
RunConfig ablation_config(const RunConfig& cfg, Variant variant);
AblationResult run_ablation_no_gcn(const Graph& g, const RunConfig& cfg, std::size_t repeats = 10,
                                   std::size_t jobs = 1);

struct SweepPoint {
  std::size_t value = 0;
  MainResult result;
};

double spread(const std::vector<SweepPoint>& points);

std::vector<SweepPoint> run_bandwidth_sweep(const Graph& g, const RunConfig& cfg,
                                            const std::vector<std::size_t>& n_values = {2, 3, 4, 5, 6},
                                            std::size_t repeats = 10, std::size_t jobs = 1);

struct DepthSweepResult {
  std::vector<SweepPoint> nfc;
  std::vector<SweepPoint> baseline;  // empty when no baseline config was given
  double spread() const { return nfcgcn::spread(nfc); }
};

DepthSweepResult run_depth_sweep(const Graph& g, const RunConfig& cfg, const std::optional<RunConfig>& baseline,
                                 const std::vector<std::size_t>& k_values = {1, 2, 3, 4, 5},
                                 std::size_t repeats = 10, std::size_t jobs = 1);

// A 200-epoch style run: early stopping disabled.
RunConfig curves_config(RunConfig cfg);
void export_curves(const RunResult& run, const std::filesystem::path& path);

// results/<experiment>/<dataset>/<UTC timestamp>[-k], created fresh.
std::filesystem::path make_results_dir(const std::filesystem::path& root, const std::string& experiment,
                                       const std::string& dataset);

nlohmann::json run_json(const GridOutcome& run);
nlohmann::json main_json(const MainResult& r);
nlohmann::json sweep_json(const std::vector<SweepPoint>& points, const std::string& key);

// Writes config.json, summary.json and, when curves are given, curves.csv.
void write_results(const std::filesystem::path& dir, const nlohmann::json& config, const nlohmann::json& summary,
                   const std::vector<EpochRecord>* curves = nullptr);

}  // namespace nfcgcn
