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

// nfcgcn: command-line entry point.
//
//   nfcgcn prepare    --input <dir> --format {linqs|canonical} --out <dir> [--split <preset|a,b,c>] [--seed N]
//   nfcgcn train      --data <dir> --preset <name> [--override key=value ...]
//   nfcgcn eval       --checkpoint <file> --data <dir> [--mask test]
//   nfcgcn gradcheck  [--variant <name>] [--json]
//   nfcgcn experiment {main|no-gcn|bandwidth|depth|curves} --data <dir> [--preset <name>]
//
// Exit codes: 0 success, 1 data error, 2 usage error, 3 numeric failure.

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nfcgcn/dataset_io.hpp"
#include "nfcgcn/error.hpp"
#include "nfcgcn/experiments.hpp"
#include "nfcgcn/gradcheck.hpp"
#include "nfcgcn/kernels.hpp"
#include "nfcgcn/presets.hpp"
#include "nfcgcn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nfcgcn;

namespace {

struct Globals {
  std::string workdir = ".";
  std::string presets_dir;
};

fs::path resolve(const Globals& g, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : fs::path(g.workdir) / path;
}

fs::path preset_dir(const Globals& g) {
  return g.presets_dir.empty() ? default_preset_dir() : resolve(g, g.presets_dir);
}

std::string pct(double acc) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * acc);
  return buf;
}

std::string dataset_name(const fs::path& dir) {
  auto p = dir;
  if (!p.has_filename()) p = p.parent_path();
  return p.filename().string();
}

Graph load_dataset(const fs::path& dir) {
  if (!fs::exists(dir / "nodes.tsv")) {
    throw DataError("no canonical dataset at " + dir.string() +
                    " (nodes.tsv missing); create one with `nfcgcn prepare --input <raw> --out " + dir.string() + "`");
  }
  return load_canonical(dir);
}

SplitSpec parse_split(const std::string& text, std::uint64_t seed) {
  if (text.find(',') == std::string::npos) return split_preset(text, seed);
  SplitSpec s;
  s.seed = seed;
  std::stringstream ss(text);
  std::string part;
  std::vector<std::size_t> counts;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      counts.push_back(std::stoul(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("split counts must be three integers train,val,test; got '" + text + "'");
    }
  }
  if (counts.size() != 3) throw UsageError("split counts must be three integers train,val,test; got '" + text + "'");
  s.train_count = counts[0];
  s.val_count = counts[1];
  s.test_count = counts[2];
  return s;
}

// Ensures the graph has train/val/test masks, drawing `split` when given or
// when the dataset carries none.
Graph with_split(Graph g, const std::string& split, std::uint64_t seed) {
  const bool has_masks = mask_count(g.masks().train) > 0;
  if (!split.empty()) return g.with_masks(make_split(g, parse_split(split, seed)));
  if (!has_masks) throw DataError("dataset has no split; pass --split <preset|train,val,test>");
  return g;
}

struct LoadedPreset {
  Preset preset;
  RunConfig config;
};

LoadedPreset load_config(const Globals& globals, const std::string& name, const std::vector<std::string>& overrides) {
  LoadedPreset lp{load_preset(name, preset_dir(globals)), {}};
  lp.config = config_from_json(apply_overrides(lp.preset.config, overrides));
  validate_config(lp.config);
  return lp;
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareArgs {
  std::string input, format = "linqs", out, split;
  std::uint64_t seed = 1;
  bool json_out = false;
};

std::pair<fs::path, fs::path> find_linqs_files(const fs::path& dir) {
  std::optional<fs::path> content, cites;
  if (!fs::is_directory(dir)) throw DataError("input directory " + dir.string() + " does not exist");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".content") content = e.path();
    if (e.path().extension() == ".cites") cites = e.path();
  }
  if (!content) throw DataError("no *.content file in " + dir.string());
  if (!cites) throw DataError("no *.cites file in " + dir.string());
  return {*content, *cites};
}

int cmd_prepare(const Globals& globals, const PrepareArgs& a) {
  const fs::path in = resolve(globals, a.input);
  const fs::path out = resolve(globals, a.out);
  Graph g;
  std::optional<LinqsDataset> linqs;
  if (a.format == "linqs") {
    const auto [content, cites] = find_linqs_files(in);
    linqs = parse_linqs(content, cites);
    g = linqs->graph;
  } else {
    g = load_dataset(in);
  }
  if (!a.split.empty()) g = g.with_masks(make_split(g, parse_split(a.split, a.seed)));
  save_canonical(g, out, linqs ? &linqs->original_ids : nullptr);

  const auto stats = degree_stats(g);
  json summary = {
      {"nodes", g.num_nodes()},
      {"edges", g.edges().size()},
      {"features", g.num_features()},
      {"classes", g.num_classes()},
      {"train", mask_count(g.masks().train)},
      {"val", mask_count(g.masks().val)},
      {"test", mask_count(g.masks().test)},
      {"degree", {{"highest", stats.highest}, {"lowest", stats.lowest}, {"mean", stats.mean}, {"median", stats.median}}},
      {"out", out.string()},
  };
  if (linqs) {
    summary["citation_records"] = linqs->raw_citations;
    summary["dropped_citations"] = linqs->dropped_citations;
  }
  if (a.json_out) {
    std::cout << summary.dump(2) << "\n";
    return 0;
  }
  std::cout << g.num_nodes() << " nodes, " << g.edges().size() << " edges";
  if (linqs) std::cout << " (" << linqs->raw_citations << " citation records)";
  std::cout << ", " << g.num_features() << " features, " << g.num_classes() << " classes\n";
  std::cout << "split: " << mask_count(g.masks().train) << " train / " << mask_count(g.masks().val) << " val / "
            << mask_count(g.masks().test) << " test\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "degree: highest %zu, lowest %zu, mean %.2f, median %g\n", stats.highest,
                stats.lowest, stats.mean, stats.median);
  std::cout << buf << "wrote " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / eval

struct TrainArgs {
  std::string data, preset, split;
  std::vector<std::string> overrides;
  bool no_classifier_affine = false;
  bool json_out = false;
  bool quiet = false;
};

int cmd_train(const Globals& globals, const TrainArgs& a) {
  const fs::path data = resolve(globals, a.data);
  const auto lp = load_config(globals, a.preset, a.overrides);
  Graph g = with_split(load_dataset(data), a.split, lp.config.seed);

  EpochCallback progress;
  if (!a.quiet && !a.json_out) {
    progress = [](const EpochRecord& r) {
      if (r.epoch % 10 == 0) {
        std::fprintf(stderr, "epoch %4zu  train_loss %.4f  val_loss %.4f  train_acc %.4f  val_acc %.4f\n", r.epoch,
                     r.train_loss, r.val_loss, r.train_acc, r.val_acc);
      }
    };
  }
  const RunResult result = train(g, lp.config, progress);

  const fs::path dir = make_results_dir(fs::path(globals.workdir), "train", dataset_name(data));
  json config = config_to_json(lp.config);
  config["preset"] = a.preset;
  config["overrides"] = a.overrides;
  json summary = summary_json(result, lp.config);
  summary["checkpoint"] = (dir / "checkpoint.json").string();
  write_results(dir, config, summary, &result.curves);
  save_checkpoint(dir / "checkpoint.json",
                  {lp.config.model, g.num_features(), result.best_sample_seed, result.best_params});

  if (a.json_out) {
    summary["results_dir"] = dir.string();
    std::cout << summary.dump(2) << "\n";
  } else {
    std::cout << "best epoch " << result.best_epoch << ", val " << pct(result.best_val_acc) << ", test "
              << pct(result.test_acc) << "\n"
              << "results: " << dir.string() << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data, mask = "test";
  bool json_out = false;
};

int cmd_eval(const Globals& globals, const EvalArgs& a) {
  const Checkpoint ck = load_checkpoint(resolve(globals, a.checkpoint));
  const Graph g = load_dataset(resolve(globals, a.data));
  if (g.num_features() != ck.feat_dim) {
    throw DataError("checkpoint expects " + std::to_string(ck.feat_dim) + " features, dataset has " +
                    std::to_string(g.num_features()));
  }
  const auto& masks = g.masks();
  const std::vector<std::uint8_t>& mask = a.mask == "train" ? masks.train : a.mask == "val" ? masks.val : masks.test;
  const double acc = evaluate(g, ck.spec, ck.params, ck.sample_seed, mask);
  if (a.json_out) {
    std::cout << json{{"mask", a.mask}, {"accuracy", acc}, {"count", mask_count(mask)}}.dump(2) << "\n";
  } else {
    std::cout << a.mask << " accuracy " << pct(acc) << " (" << mask_count(mask) << " nodes)\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  std::string variant = "all";
  std::uint64_t seed = 7;
  bool json_out = false;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  std::vector<GradCheckReport> reports;
  bool matched = false;
  for (const auto& inst : standard_instances(a.seed)) {
    if (a.variant != "all" && variant_name(inst.spec.variant) != a.variant) continue;
    matched = true;
    auto r = check_model(inst.spec, inst.graph, inst.seed);
    r.label = inst.label;
    reports.push_back(std::move(r));
  }
  if (!matched) throw UsageError("unknown variant '" + a.variant + "' (all, NFC_GCN, GCN_BASELINE, NFC_ONLY, MEAN5_ONLY)");
  bool pass = true;
  for (const auto& r : reports) pass = pass && r.pass;
  if (a.json_out) {
    json out = {{"pass", pass}, {"reports", json::array()}};
    for (const auto& r : reports) out["reports"].push_back(report_json(r));
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << format_report_table(reports);
    std::cout << (pass ? "PASS" : "FAIL") << "\n";
  }
  return pass ? 0 : 3;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
  std::string name, data, preset, baseline, split;
  std::vector<std::string> overrides;
  bool no_classifier_affine = false;
  std::vector<std::size_t> values;
  std::size_t repeats = 10;
  std::size_t jobs = 1;
  bool no_baseline = false;
  bool json_out = false;
};

// "cora-1d" -> "cora-gcn".
std::string baseline_for(const std::string& preset) {
  const auto dash = preset.rfind('-');
  return (dash == std::string::npos ? preset : preset.substr(0, dash)) + "-gcn";
}

// printf-style append; experiment tables are printed only without --json.
void appendf(std::string& out, const char* fmt, ...) __attribute__((format(printf, 2, 3)));
void appendf(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  out += buf;
}

void print_rows(std::string& text, const std::string& key, const std::vector<SweepPoint>& points) {
  appendf(text, "%-6s %10s %8s\n", key.c_str(), "mean", "std");
  for (const auto& p : points) {
    appendf(text, "%-6zu %10s %7.2f\n", p.value, pct(p.result.test_acc.mean).c_str(), 100.0 * p.result.test_acc.std);
  }
  appendf(text, "spread %s\n", pct(spread(points)).c_str());
}

int cmd_experiment(const Globals& globals, ExperimentArgs a) {
  const fs::path data = resolve(globals, a.data);
  const std::string dataset = dataset_name(data);
  if (a.preset.empty()) a.preset = dataset + "-1d";
  const auto lp = load_config(globals, a.preset, a.overrides);
  const Graph g = with_split(load_dataset(data), a.split, lp.config.seed);
  const std::string base_name = a.baseline.empty() ? baseline_for(a.preset) : a.baseline;

  json config = {{"experiment", a.name}, {"dataset", dataset},       {"preset", a.preset},
                 {"overrides", a.overrides}, {"repeats", a.repeats}, {"base_config", config_to_json(lp.config)}};
  json summary;
  std::string text;
  const std::vector<EpochRecord>* curves = nullptr;
  RunResult curve_run;

  if (a.name == "main") {
    const auto nfc = run_main(g, lp.config, a.repeats, a.jobs);
    summary = {{"nfc", main_json(nfc)}};
    appendf(text, "%-14s %10s %8s\n", "model", "mean", "std");
    appendf(text, "%-14s %10s %7.2f\n", variant_name(lp.config.model.variant).c_str(), pct(nfc.test_acc.mean).c_str(),
                100.0 * nfc.test_acc.std);
    if (!a.no_baseline) {
      const auto base_cfg = load_config(globals, base_name, {}).config;
      config["baseline_config"] = config_to_json(base_cfg);
      const auto base = run_main(g, base_cfg, a.repeats, a.jobs);
      summary["baseline"] = main_json(base);
      appendf(text, "%-14s %10s %7.2f\n", variant_name(base_cfg.model.variant).c_str(), pct(base.test_acc.mean).c_str(),
                  100.0 * base.test_acc.std);
    }
  } else if (a.name == "no-gcn") {
    const auto r = run_ablation_no_gcn(g, lp.config, a.repeats, a.jobs);
    summary = {{"nfc_only", main_json(r.nfc_only)}, {"mean5_only", main_json(r.mean5_only)}, {"gap", r.gap()}};
    appendf(text, "%-12s %10s\n%-12s %10s\n%-12s %10s\n%-12s %10s\n", "model", "mean", "NFC_ONLY",
                pct(r.nfc_only.test_acc.mean).c_str(), "MEAN5_ONLY", pct(r.mean5_only.test_acc.mean).c_str(), "gap",
                pct(r.gap()).c_str());
  } else if (a.name == "bandwidth") {
    if (a.values.empty()) a.values = {2, 3, 4, 5, 6};
    const auto points = run_bandwidth_sweep(g, lp.config, a.values, a.repeats, a.jobs);
    summary = sweep_json(points, "n");
    print_rows(text, "n", points);
  } else if (a.name == "depth") {
    if (a.values.empty()) a.values = {1, 2, 3, 4, 5};
    std::optional<RunConfig> base_cfg;
    if (!a.no_baseline) {
      base_cfg = load_config(globals, base_name, {}).config;
      config["baseline_config"] = config_to_json(*base_cfg);
    }
    const auto r = run_depth_sweep(g, lp.config, base_cfg, a.values, a.repeats, a.jobs);
    summary = {{"nfc", sweep_json(r.nfc, "K")}};
    appendf(text, "NFC-GCN\n");
    print_rows(text, "K", r.nfc);
    if (base_cfg) {
      summary["baseline"] = sweep_json(r.baseline, "K");
      appendf(text, "GCN baseline\n");
      print_rows(text, "K", r.baseline);
    }
  } else if (a.name == "curves") {
    const RunConfig cfg = curves_config(lp.config);
    config["base_config"] = config_to_json(cfg);
    curve_run = train(g, cfg);
    summary = summary_json(curve_run, cfg);
    curves = &curve_run.curves;
    appendf(text, "%zu epochs, best val %s at epoch %zu, test %s\n", curve_run.curves.size(),
                pct(curve_run.best_val_acc).c_str(), curve_run.best_epoch, pct(curve_run.test_acc).c_str());
  } else {
    throw UsageError("unknown experiment '" + a.name + "' (main, no-gcn, bandwidth, depth, curves)");
  }

  const fs::path dir = make_results_dir(fs::path(globals.workdir), a.name, dataset);
  write_results(dir, config, summary, curves);
  if (a.json_out) {
    summary["results_dir"] = dir.string();
    std::cout << summary.dump(2) << "\n";
  } else {
    std::cout << text << "results: " << dir.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NFC-GCN: graph convolutional networks with node-feature convolution"};
  app.require_subcommand(1);
  Globals globals;
  app.add_option("--workdir", globals.workdir, "Base directory for relative paths and results")->capture_default_str();
  app.add_option("--presets", globals.presets_dir, "Directory holding preset JSON files");

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Convert a raw dataset to the canonical layout");
  prepare->add_option("--input", prep.input, "Raw dataset directory")->required();
  prepare->add_option("--format", prep.format, "Input format")->check(CLI::IsMember({"linqs", "canonical"}));
  prepare->add_option("--out", prep.out, "Output directory")->required();
  prepare->add_option("--split", prep.split, "Split preset name or train,val,test counts");
  prepare->add_option("--seed", prep.seed, "Split seed");
  prepare->add_flag("--json", prep.json_out);

  TrainArgs tr;
  auto* trainc = app.add_subcommand("train", "Train one model from a preset");
  trainc->add_option("--data", tr.data, "Canonical dataset directory")->required();
  trainc->add_option("--preset", tr.preset, "Preset name")->required();
  trainc->add_option("--override", tr.overrides, "key=value config override (repeatable)");
  trainc->add_option("--split", tr.split, "Regenerate the split: preset name or train,val,test counts");
  trainc->add_flag("--no-classifier-affine", tr.no_classifier_affine,
                   "Softmax directly on the last GCN layer (same as model.classifier_affine=false)");
  trainc->add_flag("--json", tr.json_out);
  trainc->add_flag("--quiet", tr.quiet);

  EvalArgs ev;
  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint");
  evalc->add_option("--checkpoint", ev.checkpoint)->required();
  evalc->add_option("--data", ev.data)->required();
  evalc->add_option("--mask", ev.mask)->check(CLI::IsMember({"train", "val", "test"}));
  evalc->add_flag("--json", ev.json_out);

  GradcheckArgs gc;
  auto* gradc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gradc->add_option("--variant", gc.variant, "all, NFC_GCN, GCN_BASELINE, NFC_ONLY or MEAN5_ONLY");
  gradc->add_option("--seed", gc.seed);
  gradc->add_flag("--json", gc.json_out);

  ExperimentArgs ex;
  auto* expc = app.add_subcommand("experiment", "Run a study over several seeds");
  expc->add_option("name", ex.name, "main, no-gcn, bandwidth, depth or curves")
      ->required()
      ->check(CLI::IsMember({"main", "no-gcn", "bandwidth", "depth", "curves"}));
  expc->add_option("--data", ex.data)->required();
  expc->add_option("--preset", ex.preset, "NFC preset (default <dataset>-1d)");
  expc->add_option("--baseline", ex.baseline, "Baseline preset (default <dataset>-gcn)");
  expc->add_flag("--no-baseline", ex.no_baseline);
  expc->add_option("--override", ex.overrides);
  expc->add_option("--split", ex.split);
  expc->add_option("--values", ex.values, "Sweep values (bandwidths or depths)")->delimiter(',');
  expc->add_option("--repeats", ex.repeats)->check(CLI::PositiveNumber);
  expc->add_option("--jobs", ex.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  expc->add_flag("--no-classifier-affine", ex.no_classifier_affine);
  expc->add_flag("--json", ex.json_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (tr.no_classifier_affine) tr.overrides.push_back("model.classifier_affine=false");
  if (ex.no_classifier_affine) ex.overrides.push_back("model.classifier_affine=false");

  if (const char* env = std::getenv("NFCGCN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) kernels::set_num_threads(n);
  }

  try {
    if (*prepare) return cmd_prepare(globals, prep);
    if (*trainc) return cmd_train(globals, tr);
    if (*evalc) return cmd_eval(globals, ev);
    if (*gradc) return cmd_gradcheck(gc);
    if (*expc) return cmd_experiment(globals, ex);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
