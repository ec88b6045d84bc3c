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

#include "nfcgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nfcgcn/error.hpp"

namespace nfcgcn {

std::size_t mask_count(std::span<const std::uint8_t> mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }));
}

namespace {

void check_mask_length(const std::vector<std::uint8_t>& m, std::size_t n, const char* name) {
  if (m.size() != n) {
    throw DataError(std::string(name) + " mask has length " + std::to_string(m.size()) + ", expected " +
                    std::to_string(n));
  }
}

void validate_masks(const Masks& masks, const std::vector<int>& labels, int num_classes) {
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const int hits = (masks.train[i] != 0) + (masks.val[i] != 0) + (masks.test[i] != 0);
    if (hits > 1) throw DataError("node " + std::to_string(i) + " appears in more than one mask");
    if (hits == 1 && (labels[i] < 0 || labels[i] >= num_classes)) {
      throw DataError("node " + std::to_string(i) + " is in a mask but has no valid label");
    }
  }
}

}  // namespace

Graph build_graph(std::size_t num_nodes, std::span<const Edge> edges, Matrix features, std::vector<int> labels,
                  Masks masks, int num_classes) {
  if (features.rows() != num_nodes) {
    throw DataError("feature matrix has " + std::to_string(features.rows()) + " rows, expected " +
                    std::to_string(num_nodes));
  }
  if (labels.size() != num_nodes) {
    throw DataError("label vector has length " + std::to_string(labels.size()) + ", expected " +
                    std::to_string(num_nodes));
  }
  if (masks.train.empty() && masks.val.empty() && masks.test.empty()) masks = Masks::empty(num_nodes);
  check_mask_length(masks.train, num_nodes, "train");
  check_mask_length(masks.val, num_nodes, "val");
  check_mask_length(masks.test, num_nodes, "test");

  int max_label = -1;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    if (labels[i] < kUnlabeled) throw DataError("node " + std::to_string(i) + " has negative label");
    max_label = std::max(max_label, labels[i]);
  }
  if (num_classes < 0) num_classes = max_label + 1;
  if (max_label >= num_classes) {
    throw DataError("label " + std::to_string(max_label) + " exceeds class count " + std::to_string(num_classes));
  }
  validate_masks(masks, labels, num_classes);

  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    if (a >= num_nodes || b >= num_nodes) {
      throw DataError("edge (" + std::to_string(a) + "," + std::to_string(b) + ") references a node outside [0," +
                      std::to_string(num_nodes) + ")");
    }
    if (a == b) continue;
    canon.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  Graph g;
  g.num_nodes_ = num_nodes;
  g.num_classes_ = num_classes;
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.masks_ = std::move(masks);

  std::vector<std::size_t> deg(num_nodes, 0);
  for (const auto& [a, b] : canon) {
    ++deg[a];
    ++deg[b];
  }
  g.offsets_.assign(num_nodes + 1, 0);
  for (std::size_t i = 0; i < num_nodes; ++i) g.offsets_[i + 1] = g.offsets_[i] + deg[i];
  g.adj_.resize(g.offsets_[num_nodes]);
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [a, b] : canon) {
    g.adj_[cursor[a]++] = b;
    g.adj_[cursor[b]++] = a;
  }
  for (std::size_t i = 0; i < num_nodes; ++i) {
    std::sort(g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
              g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));
  }
  g.edges_ = std::move(canon);
  return g;
}

Graph Graph::with_masks(Masks masks) const {
  check_mask_length(masks.train, num_nodes_, "train");
  check_mask_length(masks.val, num_nodes_, "val");
  check_mask_length(masks.test, num_nodes_, "test");
  validate_masks(masks, labels_, num_classes_);
  Graph g = *this;
  g.masks_ = std::move(masks);
  return g;
}

double NormalizedAdjacency::at(NodeId i, NodeId j) const {
  const auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

Matrix NormalizedAdjacency::to_dense() const {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) m(i, col_idx[e]) = values[e];
  }
  return m;
}

NormalizedAdjacency NormalizedAdjacency::transposed() const {
  NormalizedAdjacency t;
  t.form = form;
  t.n = n;
  t.row_ptr.assign(n + 1, 0);
  for (auto c : col_idx) ++t.row_ptr[c + 1];
  for (std::size_t i = 0; i < n; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col_idx.resize(col_idx.size());
  t.values.resize(values.size());
  std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Rows are visited in order, so each transposed row stays column-sorted.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const std::size_t dst = cursor[col_idx[e]]++;
      t.col_idx[dst] = static_cast<NodeId>(i);
      t.values[dst] = values[e];
    }
  }
  return t;
}

namespace {

// Pattern of A + I in CSR with columns sorted; values filled by `weight(i, j)`.
template <typename Weight>
NormalizedAdjacency self_loop_csr(const Graph& g, AdjacencyForm form, Weight weight) {
  NormalizedAdjacency out;
  out.form = form;
  out.n = g.num_nodes();
  out.row_ptr.assign(out.n + 1, 0);
  for (std::size_t i = 0; i < out.n; ++i) out.row_ptr[i + 1] = out.row_ptr[i] + g.degree(static_cast<NodeId>(i)) + 1;
  out.col_idx.reserve(out.row_ptr.back());
  out.values.reserve(out.row_ptr.back());
  for (std::size_t i = 0; i < out.n; ++i) {
    const auto self = static_cast<NodeId>(i);
    bool placed = false;
    for (NodeId j : g.neighbors(self)) {
      if (!placed && j > self) {
        out.col_idx.push_back(self);
        out.values.push_back(weight(self, self));
        placed = true;
      }
      out.col_idx.push_back(j);
      out.values.push_back(weight(self, j));
    }
    if (!placed) {
      out.col_idx.push_back(self);
      out.values.push_back(weight(self, self));
    }
  }
  return out;
}

}  // namespace

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  std::vector<double> inv_sqrt(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(static_cast<NodeId>(i)) + 1));
  }
  return self_loop_csr(g, AdjacencyForm::kSymNormSelfLoop,
                       [&](NodeId i, NodeId j) { return inv_sqrt[i] * inv_sqrt[j]; });
}

NormalizedAdjacency mean_adjacency(const Graph& g) {
  return self_loop_csr(g, AdjacencyForm::kRowMeanSelfLoop, [&](NodeId i, NodeId) {
    return 1.0 / static_cast<double>(g.degree(i) + 1);
  });
}

DegreeStats degree_stats(const Graph& g) {
  if (g.num_nodes() == 0) throw DataError("degree statistics of an empty graph are undefined");
  std::vector<std::size_t> deg(g.num_nodes());
  for (std::size_t i = 0; i < deg.size(); ++i) deg[i] = g.degree(static_cast<NodeId>(i));
  std::sort(deg.begin(), deg.end());
  DegreeStats s;
  s.lowest = deg.front();
  s.highest = deg.back();
  s.mean = static_cast<double>(std::accumulate(deg.begin(), deg.end(), std::size_t{0})) /
           static_cast<double>(deg.size());
  s.median = static_cast<double>(deg[(deg.size() - 1) / 2]);
  return s;
}

}  // namespace nfcgcn
