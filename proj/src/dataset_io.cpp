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

#include "nfcgcn/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <string_view>
#include <unordered_map>

#include "nfcgcn/error.hpp"
#include "nfcgcn/rng.hpp"

namespace nfcgcn {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::string where(const fs::path& p, std::size_t line) { return p.string() + ":" + std::to_string(line) + ": "; }

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

double parse_real(std::string_view s, const fs::path& p, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError(where(p, line) + "malformed number '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s, const fs::path& p, std::size_t line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError(where(p, line) + "malformed integer '" + std::string(s) + "'");
  }
  return v;
}

void append_real(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

LinqsDataset parse_linqs(const fs::path& content_path, const fs::path& cites_path,
                         const std::optional<std::vector<std::string>>& known_classes) {
  struct Row {
    std::string id;
    std::vector<double> values;
    std::string cls;
  };
  std::vector<Row> rows;
  std::size_t dim = 0;
  {
    auto in = open_input(content_path);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = trim_cr(raw);
      if (line.empty()) continue;
      const auto fields = split_tabs(line);
      if (fields.size() < 3) throw DataError(where(content_path, line_no) + "expected id, features and class");
      Row r;
      r.id = std::string(fields.front());
      r.cls = std::string(fields.back());
      r.values.reserve(fields.size() - 2);
      for (std::size_t f = 1; f + 1 < fields.size(); ++f) r.values.push_back(parse_real(fields[f], content_path, line_no));
      if (rows.empty()) {
        dim = r.values.size();
      } else if (r.values.size() != dim) {
        throw DataError(where(content_path, line_no) + "feature vector has length " + std::to_string(r.values.size()) +
                        ", expected " + std::to_string(dim));
      }
      rows.push_back(std::move(r));
    }
  }

  LinqsDataset ds;
  if (known_classes) {
    ds.class_names = *known_classes;
  } else {
    for (const auto& r : rows) ds.class_names.push_back(r.cls);
    std::sort(ds.class_names.begin(), ds.class_names.end());
    ds.class_names.erase(std::unique(ds.class_names.begin(), ds.class_names.end()), ds.class_names.end());
  }
  std::unordered_map<std::string, int> class_index;
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) class_index.emplace(ds.class_names[c], static_cast<int>(c));

  std::unordered_map<std::string, NodeId> node_index;
  Matrix features(rows.size(), dim);
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto [it, inserted] = node_index.emplace(rows[i].id, static_cast<NodeId>(i));
    if (!inserted) throw DataError(where(content_path, i + 1) + "duplicate node id '" + rows[i].id + "'");
    const auto cls = class_index.find(rows[i].cls);
    if (cls == class_index.end()) throw DataError(where(content_path, i + 1) + "unknown class '" + rows[i].cls + "'");
    labels[i] = cls->second;
    std::copy(rows[i].values.begin(), rows[i].values.end(), features.row(i).begin());
    ds.original_ids.push_back(rows[i].id);
  }

  std::vector<Edge> edges;
  {
    auto in = open_input(cites_path);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = trim_cr(raw);
      if (line.empty()) continue;
      const auto fields = split_tabs(line);
      if (fields.size() != 2) throw DataError(where(cites_path, line_no) + "expected two ids");
      ++ds.raw_citations;
      const auto a = node_index.find(std::string(fields[0]));
      const auto b = node_index.find(std::string(fields[1]));
      if (a == node_index.end() || b == node_index.end()) {
        ++ds.dropped_citations;
        continue;
      }
      edges.emplace_back(a->second, b->second);
    }
  }
  ds.graph = build_graph(rows.size(), edges, std::move(features), std::move(labels), {},
                         static_cast<int>(ds.class_names.size()));
  return ds;
}

Masks make_split(const Graph& g, const SplitSpec& spec) {
  std::vector<NodeId> pool;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (g.labels()[i] != kUnlabeled) pool.push_back(static_cast<NodeId>(i));
  }
  const std::size_t train_need =
      spec.train_per_class > 0 ? spec.train_per_class * static_cast<std::size_t>(g.num_classes()) : spec.train_count;
  if (spec.test_count + spec.val_count + train_need > pool.size()) {
    throw DataError("split " + std::to_string(train_need) + "/" + std::to_string(spec.val_count) + "/" +
                    std::to_string(spec.test_count) + " exceeds the " + std::to_string(pool.size()) +
                    " labeled nodes");
  }
  // Fisher-Yates over the whole pool; consecutive slices give test, val, train.
  Rng rng(spec.seed);
  for (std::size_t i = pool.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(pool[i - 1], pool[j]);
  }
  Masks m = Masks::empty(g.num_nodes());
  std::size_t pos = 0;
  for (std::size_t t = 0; t < spec.test_count; ++t) m.test[pool[pos++]] = 1;
  for (std::size_t t = 0; t < spec.val_count; ++t) m.val[pool[pos++]] = 1;
  if (spec.train_per_class == 0) {
    for (std::size_t t = 0; t < spec.train_count; ++t) m.train[pool[pos++]] = 1;
  } else {
    std::vector<std::size_t> taken(static_cast<std::size_t>(g.num_classes()), 0);
    for (; pos < pool.size(); ++pos) {
      auto& count = taken[static_cast<std::size_t>(g.labels()[pool[pos]])];
      if (count < spec.train_per_class) {
        ++count;
        m.train[pool[pos]] = 1;
      }
    }
    for (std::size_t c = 0; c < taken.size(); ++c) {
      if (taken[c] < spec.train_per_class) {
        throw DataError("class " + std::to_string(c) + " has only " + std::to_string(taken[c]) +
                        " nodes left for training");
      }
    }
  }
  return m;
}

SplitSpec split_preset(const std::string& name, std::uint64_t seed) {
  static const std::map<std::string, SplitSpec> presets = {
      {"cora-fastgcn", {1208, 500, 1000, 0, 0}},
      {"citeseer-fastgcn", {1827, 500, 1000, 0, 0}},
      {"pubmed-fastgcn", {18217, 500, 1000, 0, 0}},
      {"planetoid-style", {0, 500, 1000, 0, 20}},
  };
  const auto it = presets.find(name);
  if (it == presets.end()) throw UsageError("unknown split preset '" + name + "'");
  SplitSpec s = it->second;
  s.seed = seed;
  return s;
}

std::vector<std::string> split_preset_names() {
  return {"cora-fastgcn", "citeseer-fastgcn", "pubmed-fastgcn", "planetoid-style"};
}

void save_canonical(const Graph& g, const fs::path& dir, const std::vector<std::string>* original_ids) {
  fs::create_directories(dir);
  auto open_output = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open_output("nodes.tsv");
    std::string line;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      line = std::to_string(i) + '\t' + std::to_string(g.labels()[i]);
      for (double v : g.features().row(i)) {
        line += '\t';
        append_real(line, v);
      }
      line += '\n';
      out << line;
    }
  }
  {
    auto out = open_output("edges.tsv");
    for (const auto& [a, b] : g.edges()) out << a << '\t' << b << '\n';
  }
  {
    auto out = open_output("split.tsv");
    const auto& m = g.masks();
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      if (m.train[i]) out << i << "\ttrain\n";
      if (m.val[i]) out << i << "\tval\n";
      if (m.test[i]) out << i << "\ttest\n";
    }
  }
  if (original_ids != nullptr) {
    auto out = open_output("idmap.tsv");
    for (std::size_t i = 0; i < original_ids->size(); ++i) out << (*original_ids)[i] << '\t' << i << '\n';
  }
}

Graph load_canonical(const fs::path& dir) {
  const auto nodes_path = dir / "nodes.tsv";
  const auto edges_path = dir / "edges.tsv";
  const auto split_path = dir / "split.tsv";
  for (const auto& p : {nodes_path, edges_path}) {
    if (!fs::exists(p)) throw DataError("missing dataset file " + p.string());
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  {
    auto in = open_input(nodes_path);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = trim_cr(raw);
      if (line.empty()) continue;
      const auto fields = split_tabs(line);
      if (fields.size() < 2) throw DataError(where(nodes_path, line_no) + "expected node id and label");
      const auto id = parse_int(fields[0], nodes_path, line_no);
      if (id != static_cast<long long>(rows.size())) {
        throw DataError(where(nodes_path, line_no) + "node ids must be dense and ordered, got " + std::to_string(id));
      }
      labels.push_back(static_cast<int>(parse_int(fields[1], nodes_path, line_no)));
      std::vector<double> v;
      v.reserve(fields.size() - 2);
      for (std::size_t f = 2; f < fields.size(); ++f) v.push_back(parse_real(fields[f], nodes_path, line_no));
      if (!rows.empty() && v.size() != rows.front().size()) {
        throw DataError(where(nodes_path, line_no) + "feature vector has length " + std::to_string(v.size()) +
                        ", expected " + std::to_string(rows.front().size()));
      }
      rows.push_back(std::move(v));
    }
  }
  const std::size_t n = rows.size();
  const std::size_t dim = n ? rows.front().size() : 0;
  Matrix features(n, dim);
  for (std::size_t i = 0; i < n; ++i) std::copy(rows[i].begin(), rows[i].end(), features.row(i).begin());

  auto check_node = [&](long long id, const fs::path& p, std::size_t line_no) {
    if (id < 0 || static_cast<std::size_t>(id) >= n) {
      throw DataError(where(p, line_no) + "node id " + std::to_string(id) + " not in nodes file");
    }
    return static_cast<NodeId>(id);
  };

  std::vector<Edge> edges;
  {
    auto in = open_input(edges_path);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = trim_cr(raw);
      if (line.empty()) continue;
      const auto fields = split_tabs(line);
      if (fields.size() != 2) throw DataError(where(edges_path, line_no) + "expected two node ids");
      edges.emplace_back(check_node(parse_int(fields[0], edges_path, line_no), edges_path, line_no),
                         check_node(parse_int(fields[1], edges_path, line_no), edges_path, line_no));
    }
  }

  Masks masks = Masks::empty(n);
  if (fs::exists(split_path)) {
    auto in = open_input(split_path);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = trim_cr(raw);
      if (line.empty()) continue;
      const auto fields = split_tabs(line);
      if (fields.size() != 2) throw DataError(where(split_path, line_no) + "expected node id and split name");
      const auto id = check_node(parse_int(fields[0], split_path, line_no), split_path, line_no);
      if (fields[1] == "train") {
        masks.train[id] = 1;
      } else if (fields[1] == "val") {
        masks.val[id] = 1;
      } else if (fields[1] == "test") {
        masks.test[id] = 1;
      } else {
        throw DataError(where(split_path, line_no) + "unknown split '" + std::string(fields[1]) + "'");
      }
    }
  }
  return build_graph(n, edges, std::move(features), std::move(labels), std::move(masks));
}

}  // namespace nfcgcn
