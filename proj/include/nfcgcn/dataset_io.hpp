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
#include <optional>
#include <string>
#include <vector>

#include "nfcgcn/graph.hpp"

namespace nfcgcn {

// A graph parsed from LINQS-style text files, plus the id bookkeeping needed
// to write idmap.tsv.
struct LinqsDataset {
  Graph graph;
  std::vector<std::string> original_ids;  // dense index -> id as written in the content file
  std::vector<std::string> class_names;   // class index -> name
  std::size_t raw_citations = 0;          // citation lines read
  std::size_t dropped_citations = 0;      // lines whose endpoint has no content line
};

// content lines: `id<TAB>f_1..f_D<TAB>class`; cites lines: `id<TAB>id`.
// When `known_classes` is given, any other class string is rejected;
// otherwise classes are the sorted set of names found.
LinqsDataset parse_linqs(const std::filesystem::path& content_path, const std::filesystem::path& cites_path,
                         const std::optional<std::vector<std::string>>& known_classes = std::nullopt);

struct SplitSpec {
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  std::size_t test_count = 0;
  std::uint64_t seed = 0;
  // Non-zero: train takes this many nodes per class instead of train_count.
  std::size_t train_per_class = 0;
};

// Uniform sample without replacement among labeled nodes: test first, then
// val, then train from the remainder. Deterministic in spec.seed.
Masks make_split(const Graph& g, const SplitSpec& spec);

// Named split presets: cora-fastgcn, citeseer-fastgcn, pubmed-fastgcn,
// planetoid-style. Throws UsageError for unknown names.
SplitSpec split_preset(const std::string& name, std::uint64_t seed);
std::vector<std::string> split_preset_names();

// Canonical directory layout: nodes.tsv, edges.tsv, split.tsv and, when ids
// are given, idmap.tsv.
void save_canonical(const Graph& g, const std::filesystem::path& dir,
                    const std::vector<std::string>* original_ids = nullptr);
// split.tsv is optional (no masks when absent); nodes.tsv and edges.tsv are not.
Graph load_canonical(const std::filesystem::path& dir);

}  // namespace nfcgcn
