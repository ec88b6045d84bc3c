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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "nfcgcn/error.hpp"
#include "nfcgcn/rng.hpp"
#include "nfcgcn/tensor.hpp"

using namespace nfcgcn;

TEST_CASE("matrix is row-major") {
  Matrix m(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m(1, 0) == 4);
  CHECK(m.row(1)[2] == 6);
  CHECK_THROWS_AS(Matrix(2, 2, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("reset reshapes and refills") {
  Matrix m(4, 4, 7.0);
  m.reset(2, 3, 1.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.size() == 6);
  for (double v : m.values()) CHECK(v == 1.5);
  m.reset(5, 5);
  CHECK(m.size() == 25);
  CHECK(m(4, 4) == 0.0);
}

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3, 4});
  CHECK(t.numel() == 24);
  CHECK(t.rank() == 3);
  CHECK(t.grad.size() == 24);
  CHECK(t.shape_string() == "[2x3x4]");
  t.grad[5] = 1.0;
  t.zero_grad();
  CHECK(t.grad[5] == 0.0);
  CHECK(shape_product({}) == 1);
}

TEST_CASE("check_finite names the location") {
  std::vector<double> ok{0.0, -1.0, 1e300};
  CHECK_NOTHROW(check_finite(ok, "ok"));
  std::vector<double> bad{0.0, std::numeric_limits<double>::quiet_NaN()};
  try {
    check_finite(bad, "logits");
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("index 1 in logits") != std::string::npos);
  }
  std::vector<double> inf{std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(check_finite(inf, "x"), NumericError);
}

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s) {
    for (std::uint64_t k = 0; k < 50; ++k) seen.insert(derive_seed(s, k));
  }
  CHECK(seen.size() == 2500);
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("rng replays and stays in range") {
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(5);
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("below is uniform (chi-square)") {
  // 7 cells, 70000 draws; the 0.999 quantile of chi-square with 6 dof is 22.46.
  Rng r(123);
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) ++counts[r.below(7)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi2 < 22.46);
  CHECK(r.below(1) == 0);
}
