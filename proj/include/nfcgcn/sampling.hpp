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
#include <vector>

#include "nfcgcn/graph.hpp"
#include "nfcgcn/rng.hpp"
#include "nfcgcn/tensor.hpp"

namespace nfcgcn {

// Fixed-size neighborhood of one node: members[0] is the center, followed by
// sampled neighbors in sampled order, padded with copies of the center.
struct SampledNeighborhood {
  NodeId center = 0;
  std::vector<NodeId> members;

  std::size_t bandwidth() const { return members.size(); }
};

// Per-node D x n map; column j holds the features of members[j].
struct FeatureMap {
  NodeId center = 0;
  Matrix values;
};

// Degree > n-1: n-1 distinct neighbors drawn uniformly without replacement.
// Otherwise all neighbors followed by (n-1-degree) copies of the center.
SampledNeighborhood sample_neighborhood(const Graph& g, NodeId center, std::size_t bandwidth, Rng& rng);

FeatureMap build_feature_map(const Graph& g, const SampledNeighborhood& nb);

// Member lists for every node, stored as an N x n table. Node i draws from
// its own stream derive_seed(seed, i), so the table does not depend on the
// order (or thread) in which nodes are processed.
class NeighborhoodTable {
 public:
  NeighborhoodTable() = default;
  NeighborhoodTable(std::size_t num_nodes, std::size_t bandwidth)
      : num_nodes_(num_nodes), bandwidth_(bandwidth), members_(num_nodes * bandwidth) {}

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t bandwidth() const { return bandwidth_; }
  std::span<const NodeId> row(std::size_t i) const { return {members_.data() + i * bandwidth_, bandwidth_}; }
  std::span<NodeId> row(std::size_t i) { return {members_.data() + i * bandwidth_, bandwidth_}; }

  friend bool operator==(const NeighborhoodTable&, const NeighborhoodTable&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::size_t bandwidth_ = 0;
  std::vector<NodeId> members_;
};

NeighborhoodTable sample_table(const Graph& g, std::size_t bandwidth, std::uint64_t seed);

// Dense maps for every node. Memory is N*D*n doubles; the training pipeline
// works from sample_table() instead.
std::vector<FeatureMap> sample_all(const Graph& g, std::size_t bandwidth, std::uint64_t seed);

}  // namespace nfcgcn
