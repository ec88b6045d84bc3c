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
#include <span>
#include <utility>
#include <vector>

#include "nfcgcn/tensor.hpp"

namespace nfcgcn {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

inline constexpr int kUnlabeled = -1;

struct Masks {
  std::vector<std::uint8_t> train;
  std::vector<std::uint8_t> val;
  std::vector<std::uint8_t> test;

  static Masks empty(std::size_t n) { return {std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0),
                                              std::vector<std::uint8_t>(n, 0)}; }
  friend bool operator==(const Masks&, const Masks&) = default;
};

std::size_t mask_count(std::span<const std::uint8_t> mask);

// Undirected simple graph with dense node features. Immutable once built;
// construct through build_graph().
class Graph {
 public:
  Graph() = default;

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_features() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }

  // Canonical edge list: each undirected edge once, as (lo, hi), sorted.
  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const Masks& masks() const { return masks_; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {adj_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }

  Graph with_masks(Masks masks) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.num_classes_ == b.num_classes_ && a.edges_ == b.edges_ &&
           a.features_ == b.features_ && a.labels_ == b.labels_ && a.masks_ == b.masks_;
  }

 private:
  friend Graph build_graph(std::size_t, std::span<const Edge>, Matrix, std::vector<int>, Masks, int);

  std::size_t num_nodes_ = 0;
  int num_classes_ = 0;
  std::vector<Edge> edges_;
  Matrix features_;
  std::vector<int> labels_;
  Masks masks_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adj_;
};

// Validates and canonicalizes raw input: drops self-loops, symmetrizes and
// deduplicates edges. Empty masks are expanded to all-false. `num_classes`
// of -1 means max(label)+1. Throws DataError on any violated invariant.
Graph build_graph(std::size_t num_nodes, std::span<const Edge> edges, Matrix features, std::vector<int> labels,
                  Masks masks = {}, int num_classes = -1);

enum class AdjacencyForm { kSymNormSelfLoop, kRowMeanSelfLoop };

// Sparse N x N propagation matrix in CSR layout.
struct NormalizedAdjacency {
  AdjacencyForm form = AdjacencyForm::kSymNormSelfLoop;
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<NodeId> col_idx;
  std::vector<double> values;

  double at(NodeId i, NodeId j) const;
  Matrix to_dense() const;
  NormalizedAdjacency transposed() const;
};

// D~^{-1/2} (A + I) D~^{-1/2}
NormalizedAdjacency normalize_adjacency(const Graph& g);
// D~^{-1} (A + I): mean over a node and its full neighborhood.
NormalizedAdjacency mean_adjacency(const Graph& g);

struct DegreeStats {
  std::size_t highest = 0;
  std::size_t lowest = 0;
  double mean = 0.0;
  double median = 0.0;
};

// Degrees exclude self-loops; the median of an even-length list is the lower middle.
DegreeStats degree_stats(const Graph& g);

}  // namespace nfcgcn
