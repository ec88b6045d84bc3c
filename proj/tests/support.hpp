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

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "nfcgcn/graph.hpp"
#include "nfcgcn/rng.hpp"
#include "nfcgcn/tensor.hpp"

namespace testsupport {

using namespace nfcgcn;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

// Mostly-zero 0/1 matrix, like bag-of-words features.
inline Matrix random_binary(std::size_t rows, std::size_t cols, double density, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform() < density ? 1.0 : 0.0;
  return m;
}

inline std::vector<Edge> random_edges(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < count; ++i) {
    e.emplace_back(static_cast<NodeId>(rng.below(n)), static_cast<NodeId>(rng.below(n)));
  }
  return e;
}

// Random graph with labels in [0, classes) and a 50/25/25 split by index.
inline Graph random_graph(std::size_t n, std::size_t d, int classes, std::size_t edges, std::uint64_t seed,
                          double density = 0.3) {
  Rng rng(seed);
  auto x = random_binary(n, d, density, rng);
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  auto m = Masks::empty(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 4 < 2) m.train[i] = 1;
    else if (i % 4 == 2) m.val[i] = 1;
    else m.test[i] = 1;
  }
  return build_graph(n, random_edges(n, edges, rng), std::move(x), std::move(labels), std::move(m), classes);
}

// Two disjoint cliques of `size` nodes each; clique c has label c and its
// nodes switch on feature block c (plus a little shared noise).
inline Graph two_cliques(std::size_t size, std::size_t d = 8, std::uint64_t seed = 3) {
  Rng rng(seed);
  const std::size_t n = 2 * size;
  std::vector<Edge> edges;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t a = 0; a < size; ++a) {
      for (std::size_t b = a + 1; b < size; ++b) {
        edges.emplace_back(static_cast<NodeId>(c * size + a), static_cast<NodeId>(c * size + b));
      }
    }
  }
  Matrix x(n, d);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i / size;
    labels[i] = static_cast<int>(c);
    for (std::size_t f = 0; f < d / 2; ++f) x(i, c * (d / 2) + f) = rng.uniform() < 0.7 ? 1.0 : 0.0;
    x(i, rng.below(d)) = 1.0;
  }
  auto m = Masks::empty(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % size < size / 2) m.train[i] = 1;
    else if (i % 2 == 0) m.val[i] = 1;
    else m.test[i] = 1;
  }
  return build_graph(n, edges, std::move(x), std::move(labels), std::move(m), 2);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  return worst;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nfcgcn_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path cora_raw_dir() { return std::filesystem::path(NFCGCN_DATA_DIR) / "cora"; }

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

// Runs a shell command and captures stdout, plus stderr when `merge_stderr`.
inline CommandResult run_command(const std::string& cmd, bool merge_stderr = false) {
  CommandResult r;
  const std::string full = cmd + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(full.c_str(), "r"), pclose);
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe.get())) r.out += buf.data();
  const int status = pclose(pipe.release());
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace testsupport
