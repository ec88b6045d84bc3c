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

#include "nfcgcn/sampling.hpp"

#include <algorithm>
#include <stdexcept>

namespace nfcgcn {

namespace {

void fill_members(const Graph& g, NodeId center, Rng& rng, std::span<NodeId> out) {
  const std::size_t n = out.size();
  if (n == 0) throw std::invalid_argument("bandwidth must be at least 1");
  out[0] = center;
  const auto nbrs = g.neighbors(center);
  const std::size_t slots = n - 1;
  if (nbrs.size() > slots) {
    // Partial Fisher-Yates: the first `slots` entries of a uniform shuffle.
    std::vector<NodeId> pool(nbrs.begin(), nbrs.end());
    for (std::size_t s = 0; s < slots; ++s) {
      const auto j = s + static_cast<std::size_t>(rng.below(pool.size() - s));
      std::swap(pool[s], pool[j]);
      out[s + 1] = pool[s];
    }
    return;
  }
  std::copy(nbrs.begin(), nbrs.end(), out.begin() + 1);
  std::fill(out.begin() + 1 + static_cast<std::ptrdiff_t>(nbrs.size()), out.end(), center);
}

}  // namespace

SampledNeighborhood sample_neighborhood(const Graph& g, NodeId center, std::size_t bandwidth, Rng& rng) {
  SampledNeighborhood nb;
  nb.center = center;
  nb.members.resize(bandwidth);
  fill_members(g, center, rng, nb.members);
  return nb;
}

FeatureMap build_feature_map(const Graph& g, const SampledNeighborhood& nb) {
  const std::size_t d = g.num_features();
  FeatureMap fm{nb.center, Matrix(d, nb.bandwidth())};
  for (std::size_t j = 0; j < nb.bandwidth(); ++j) {
    const auto x = g.features().row(nb.members[j]);
    for (std::size_t r = 0; r < d; ++r) fm.values(r, j) = x[r];
  }
  return fm;
}

NeighborhoodTable sample_table(const Graph& g, std::size_t bandwidth, std::uint64_t seed) {
  if (bandwidth == 0) throw std::invalid_argument("bandwidth must be at least 1");
  NeighborhoodTable table(g.num_nodes(), bandwidth);
  const auto n = static_cast<std::ptrdiff_t>(g.num_nodes());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    fill_members(g, static_cast<NodeId>(i), rng, table.row(static_cast<std::size_t>(i)));
  }
  return table;
}

std::vector<FeatureMap> sample_all(const Graph& g, std::size_t bandwidth, std::uint64_t seed) {
  const auto table = sample_table(g, bandwidth, seed);
  std::vector<FeatureMap> maps(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const auto row = table.row(i);
    maps[i] = build_feature_map(g, {static_cast<NodeId>(i), {row.begin(), row.end()}});
  }
  return maps;
}

}  // namespace nfcgcn
