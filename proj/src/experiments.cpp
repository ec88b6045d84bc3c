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

#include "nfcgcn/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "nfcgcn/error.hpp"
#include "nfcgcn/kernels.hpp"
#include "nfcgcn/presets.hpp"

namespace nfcgcn {

namespace fs = std::filesystem;

std::vector<GridOutcome> run_grid(const Graph& g, const std::vector<GridRun>& grid, std::size_t jobs) {
  std::vector<GridOutcome> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    validate_config(grid[i].config);
    out[i].label = grid[i].label;
    out[i].config = grid[i].config;
  }
  if (jobs <= 1 || grid.size() <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) out[i].result = train(g, grid[i].config);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    kernels::set_num_threads(1);
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        out[i].result = train(g, grid[i].config);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < std::min(jobs, grid.size()); ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

SeedStats seed_stats(const std::vector<double>& values) {
  SeedStats s;
  s.per_seed = values;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<GridRun> seed_grid(const std::string& label, const RunConfig& cfg, std::size_t repeats) {
  if (repeats == 0) throw UsageError("repeats must be positive");
  std::vector<GridRun> grid;
  for (std::size_t r = 0; r < repeats; ++r) {
    GridRun run{label, cfg};
    run.config.seed = cfg.seed + r;
    grid.push_back(std::move(run));
  }
  return grid;
}

MainResult summarize(std::vector<GridOutcome> runs) {
  std::vector<double> acc;
  for (const auto& r : runs) acc.push_back(r.result.test_acc);
  MainResult m;
  m.test_acc = seed_stats(acc);
  m.runs = std::move(runs);
  return m;
}

MainResult run_main(const Graph& g, const RunConfig& cfg, std::size_t repeats, std::size_t jobs) {
  return summarize(run_grid(g, seed_grid(variant_name(cfg.model.variant), cfg, repeats), jobs));
}

namespace {

// Splits a flat grid back into consecutive groups of `repeats`.
std::vector<MainResult> regroup(std::vector<GridOutcome> all, std::size_t repeats) {
  std::vector<MainResult> groups;
  for (std::size_t start = 0; start < all.size(); start += repeats) {
    std::vector<GridOutcome> part(std::make_move_iterator(all.begin() + start),
                                  std::make_move_iterator(all.begin() + start + repeats));
    groups.push_back(summarize(std::move(part)));
  }
  return groups;
}

void append(std::vector<GridRun>& grid, std::vector<GridRun> more) {
  for (auto& r : more) grid.push_back(std::move(r));
}

}  // namespace

RunConfig ablation_config(const RunConfig& cfg, Variant variant) {
  if (variant != Variant::kNfcOnly && variant != Variant::kMean5Only) {
    throw UsageError("ablation variants are NFC_ONLY and MEAN5_ONLY");
  }
  RunConfig out = cfg;
  out.model.variant = variant;
  out.model.bandwidth = 6;
  out.model.gcn_dims.clear();
  out.model.classifier_affine = true;
  return out;
}

AblationResult run_ablation_no_gcn(const Graph& g, const RunConfig& cfg, std::size_t repeats, std::size_t jobs) {
  std::vector<GridRun> grid = seed_grid("NFC_ONLY", ablation_config(cfg, Variant::kNfcOnly), repeats);
  append(grid, seed_grid("MEAN5_ONLY", ablation_config(cfg, Variant::kMean5Only), repeats));
  auto groups = regroup(run_grid(g, grid, jobs), repeats);
  return {std::move(groups[0]), std::move(groups[1])};
}

double spread(const std::vector<SweepPoint>& points) {
  if (points.empty()) return 0.0;
  double lo = points.front().result.test_acc.mean;
  double hi = lo;
  for (const auto& p : points) {
    lo = std::min(lo, p.result.test_acc.mean);
    hi = std::max(hi, p.result.test_acc.mean);
  }
  return hi - lo;
}

std::vector<SweepPoint> run_bandwidth_sweep(const Graph& g, const RunConfig& cfg,
                                            const std::vector<std::size_t>& n_values, std::size_t repeats,
                                            std::size_t jobs) {
  std::vector<GridRun> grid;
  for (std::size_t n : n_values) {
    RunConfig c = cfg;
    c.model.bandwidth = n;
    append(grid, seed_grid("n=" + std::to_string(n), c, repeats));
  }
  auto groups = regroup(run_grid(g, grid, jobs), repeats);
  std::vector<SweepPoint> points;
  for (std::size_t i = 0; i < n_values.size(); ++i) points.push_back({n_values[i], std::move(groups[i])});
  return points;
}

DepthSweepResult run_depth_sweep(const Graph& g, const RunConfig& cfg, const std::optional<RunConfig>& baseline,
                                 const std::vector<std::size_t>& k_values, std::size_t repeats, std::size_t jobs) {
  std::vector<GridRun> grid;
  for (std::size_t k : k_values) {
    if (k == 0) throw UsageError("depth sweep needs K >= 1");
    RunConfig c = cfg;
    c.model = with_gcn_depth(cfg.model, k);
    append(grid, seed_grid("NFC K=" + std::to_string(k), c, repeats));
  }
  if (baseline) {
    for (std::size_t k : k_values) {
      RunConfig c = *baseline;
      c.model = with_gcn_depth(baseline->model, k);
      append(grid, seed_grid("GCN K=" + std::to_string(k), c, repeats));
    }
  }
  auto groups = regroup(run_grid(g, grid, jobs), repeats);
  DepthSweepResult out;
  for (std::size_t i = 0; i < k_values.size(); ++i) out.nfc.push_back({k_values[i], std::move(groups[i])});
  if (baseline) {
    for (std::size_t i = 0; i < k_values.size(); ++i) {
      out.baseline.push_back({k_values[i], std::move(groups[k_values.size() + i])});
    }
  }
  return out;
}

RunConfig curves_config(RunConfig cfg) {
  cfg.patience.reset();
  return cfg;
}

void export_curves(const RunResult& run, const fs::path& path) { write_curves_csv(run.curves, path); }

fs::path make_results_dir(const fs::path& root, const std::string& experiment, const std::string& dataset) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream stamp;
  stamp << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  const fs::path base = root / "results" / experiment / dataset;
  fs::create_directories(base);
  fs::path dir = base / stamp.str();
  for (int k = 1; !fs::create_directory(dir); ++k) dir = base / (stamp.str() + "-" + std::to_string(k));
  return dir;
}

nlohmann::json run_json(const GridOutcome& run) {
  return {
      {"label", run.label},
      {"seed", run.config.seed},
      {"test_acc", run.result.test_acc},
      {"best_val_acc", run.result.best_val_acc},
      {"best_epoch", run.result.best_epoch},
      {"epochs_run", run.result.curves.size()},
      {"config", config_to_json(run.config)},
  };
}

nlohmann::json main_json(const MainResult& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : r.runs) runs.push_back(run_json(run));
  return {{"mean_test_acc", r.test_acc.mean},
          {"std_test_acc", r.test_acc.std},
          {"per_seed", r.test_acc.per_seed},
          {"runs", runs}};
}

nlohmann::json sweep_json(const std::vector<SweepPoint>& points, const std::string& key) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json row = main_json(p.result);
    row[key] = p.value;
    rows.push_back(std::move(row));
  }
  return {{"points", rows}, {"spread", spread(points)}};
}

void write_results(const fs::path& dir, const nlohmann::json& config, const nlohmann::json& summary,
                   const std::vector<EpochRecord>* curves) {
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << config.dump(2) << "\n";
  std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
  if (curves) write_curves_csv(*curves, dir / "curves.csv");
}

}  // namespace nfcgcn
