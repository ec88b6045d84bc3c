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
#include <functional>
#include <numeric>

#include "nfcgcn/error.hpp"
#include "nfcgcn/ops.hpp"
#include "support.hpp"

using namespace nfcgcn;
using testsupport::random_matrix;

namespace {

// Central differences of f with respect to every entry of `v`.
std::vector<double> numeric_grad(std::vector<double>& v, const std::function<double()>& f, double eps = 1e-6) {
  std::vector<double> g(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + eps;
    const double up = f();
    v[i] = keep - eps;
    const double down = f();
    v[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

void check_close(const std::vector<double>& analytic, const std::vector<double>& numeric, double tol = 1e-6) {
  REQUIRE(analytic.size() == numeric.size());
  for (std::size_t i = 0; i < analytic.size(); ++i) CHECK(rel_err(analytic[i], numeric[i]) < tol);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = rng.uniform() - 0.5;
  return t;
}

}  // namespace

TEST_CASE("convolution hand example") {
  Matrix fm(3, 2, {1, 2, 3, 4, 5, 6});
  ConvSpec spec{ConvMode::kConv1D, 1, 1, 1, 1, 1, false};
  Tensor w(spec.filter_shape(2));
  CHECK(w.shape == std::vector<std::size_t>{1, 1, 2});
  w.values = {1, 1};
  auto out = nfc_forward(fm, w, nullptr, spec);
  CHECK(out.shape == std::vector<std::size_t>{3, 1});
  CHECK(out.values == std::vector<double>{3, 7, 11});

  // Filter gradient with unit upstream: sum of each map column.
  Tensor dout({3, 1});
  dout.values = {1, 1, 1};
  auto dmap = nfc_backward(fm, w, nullptr, spec, dout);
  CHECK(w.grad == std::vector<double>{9, 12});
  for (double v : dmap.values()) CHECK(v == 1.0);
}

TEST_CASE("zero map and zero bias give zero output") {
  ConvSpec spec{ConvMode::kConv1D, 4, 1, 2, 1, 3, true};
  Rng rng(2);
  auto w = random_tensor(spec.filter_shape(5), rng);
  Tensor b({3});
  auto out = nfc_forward(Matrix(20, 5), w, &b, spec);
  for (double v : out.values) CHECK(v == 0.0);
}

TEST_CASE("cora arithmetic: 88 x 64 flattens to 5632") {
  ConvSpec spec{ConvMode::kConv1D, 32, 6, 16, 1, 64, true};
  auto geo = spec.geometry(1433, 6);
  CHECK(geo.out_feat() == 88);
  CHECK(geo.flat_size() == 5632);
  Rng rng(1);
  auto fm = testsupport::random_binary(1433, 6, 0.02, rng);
  auto w = random_tensor(spec.filter_shape(6), rng);
  Tensor b({64});
  auto out = nfc_forward(fm, w, &b, spec);
  CHECK(out.shape == std::vector<std::size_t>{88, 64});
  CHECK(nfc_flatten(out).numel() == 5632);

  ConvSpec two_d{ConvMode::kConv2D, 32, 3, 16, 1, 64, true};
  auto out2 = nfc_forward(fm, random_tensor(two_d.filter_shape(6), rng), &b, two_d);
  CHECK(out2.shape == std::vector<std::size_t>{88, 4, 64});
}

TEST_CASE("geometry rejects oversized filters") {
  ConvSpec spec{ConvMode::kConv1D, 10, 1, 1, 1, 1, true};
  CHECK_THROWS_AS(spec.geometry(9, 3), UsageError);
  ConvSpec wide{ConvMode::kConv2D, 2, 4, 1, 1, 1, true};
  CHECK_THROWS_AS(wide.geometry(9, 3), UsageError);
}

TEST_CASE("flatten is row-major") {
  Tensor t({2, 2});
  t.values = {1, 2, 3, 4};
  auto f = nfc_flatten(t);
  CHECK(f.shape == std::vector<std::size_t>{4});
  CHECK(f.values == std::vector<double>{1, 2, 3, 4});
  CHECK(nfc_flatten(Tensor({1, 1})).numel() == 1);
  CHECK_THROWS_AS(nfc_flatten(Tensor({4})), UsageError);
}

TEST_CASE("relu and affine hand cases") {
  auto y = relu_forward(Matrix(1, 3, {-1, 0, 2}));
  CHECK(y == Matrix(1, 3, {0, 0, 2}));
  auto dx = relu_backward(y, Matrix(1, 3, {5, 5, 5}));
  CHECK(dx == Matrix(1, 3, {0, 0, 5}));

  Tensor w({2, 2});
  w.values = {1, 1, 1, -1};
  Tensor b({2});
  CHECK(affine_forward(Matrix(1, 2, {1, 2}), w, &b) == Matrix(1, 2, {3, -1}));
  Tensor id({2, 2});
  id.values = {1, 0, 0, 1};
  CHECK(affine_forward(Matrix(1, 2, {4, 5}), id, nullptr) == Matrix(1, 2, {4, 5}));
}

TEST_CASE("dropout") {
  Rng rng(1);
  DropoutMask mask;
  Matrix x(3, 3, 2.0);
  CHECK(dropout_forward(x, 0.0, true, rng, mask) == x);
  CHECK(mask.identity());
  CHECK(dropout_forward(x, 0.7, false, rng, mask) == x);
  CHECK_THROWS_AS(dropout_forward(x, 1.0, true, rng, mask), UsageError);

  Matrix big(1, 100000, 3.0);
  auto y = dropout_forward(big, 0.5, true, rng, mask);
  const double mean = std::accumulate(y.values().begin(), y.values().end(), 0.0) / 100000.0;
  CHECK(std::abs(mean - 3.0) < 0.03);
  for (std::size_t i = 0; i < 100; ++i) CHECK(y.values()[i] == (mask.keep[i] ? 6.0 : 0.0));

  auto g = dropout_backward(Matrix(1, 100000, 1.0), mask);
  for (std::size_t i = 0; i < 100; ++i) CHECK(g.values()[i] == (mask.keep[i] ? 2.0 : 0.0));
}

TEST_CASE("dropout masks depend only on the stream") {
  DropoutMask a, b;
  draw_dropout_mask(1000, 0.3, 77, a);
  draw_dropout_mask(1000, 0.3, 77, b);
  CHECK(a.keep == b.keep);
  draw_dropout_mask(1000, 0.3, 78, b);
  CHECK(a.keep != b.keep);
  // element i is the i-th counter draw
  const double u = static_cast<double>(derive_seed(77, 5) >> 11) * 0x1.0p-53;
  CHECK(a.keep[5] == (u >= 0.3 ? 1 : 0));
}

TEST_CASE("softmax cross-entropy") {
  auto zero = softmax_cross_entropy(Matrix(3, 7), std::vector<int>{0, 3, 6});
  CHECK(zero.loss / 3 == doctest::Approx(std::log(7.0)).epsilon(1e-12));

  auto huge = softmax_cross_entropy(Matrix(1, 2, {1000, 0}), std::vector<int>{0});
  CHECK(std::isfinite(huge.loss));
  CHECK(huge.loss < 1e-12);
  CHECK(huge.dlogits(0, 0) == doctest::Approx(0.0));

  Matrix l(2, 3, {0.2, -1.0, 0.5, 2.0, 0.1, -0.3});
  std::vector<int> y{2, 0};
  double brute = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    double z = 0.0;
    for (std::size_t c = 0; c < 3; ++c) z += std::exp(l(i, c));
    brute += -std::log(std::exp(l(i, static_cast<std::size_t>(y[i]))) / z);
  }
  auto r = softmax_cross_entropy(l, y);
  CHECK(r.loss == doctest::Approx(brute).epsilon(1e-12));
  CHECK_THROWS_AS(softmax_cross_entropy(l, std::vector<int>{0}), UsageError);
  CHECK_THROWS_AS(softmax_cross_entropy(l, std::vector<int>{0, 3}), DataError);

  std::vector<double> vals = l.values();
  auto num = numeric_grad(vals, [&] { return softmax_cross_entropy(Matrix(2, 3, vals), y).loss; });
  check_close(r.dlogits.values(), num);
}

TEST_CASE("l2 penalty") {
  ParamTensor w{"w", Tensor({1}), InitScheme::kZeros, true};
  ParamTensor b{"b", Tensor({1}), InitScheme::kZeros, false};
  std::vector<ParamTensor*> ps{&w, &b};
  CHECK(l2_penalty(ps, 1e-4) == 0.0);
  w.tensor.values = {3.0};
  b.tensor.values = {5.0};
  w.tensor.zero_grad();
  b.tensor.zero_grad();
  CHECK(l2_penalty(ps, 1e-4) == doctest::Approx(0.0009).epsilon(1e-12));
  CHECK(w.tensor.grad[0] == doctest::Approx(0.0006).epsilon(1e-12));
  CHECK(b.tensor.grad[0] == 0.0);

  Rng rng(3);
  ParamTensor big{"m", random_tensor({3, 4}, rng), InitScheme::kZeros, true};
  big.tensor.zero_grad();
  std::vector<ParamTensor*> one{&big};
  l2_penalty(one, 0.01);
  auto analytic = big.tensor.grad;
  auto num = numeric_grad(big.tensor.values, [&] {
    ParamTensor copy = big;
    std::vector<ParamTensor*> c{&copy};
    return l2_penalty(c, 0.01);
  });
  check_close(analytic, num);
}

TEST_CASE("finite differences over random shapes") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    const std::size_t d = 4 + rng.below(12);
    const std::size_t n = 1 + rng.below(5);
    const bool two_d = n > 1 && seed % 2 == 0;
    ConvSpec spec;
    spec.mode = two_d ? ConvMode::kConv2D : ConvMode::kConv1D;
    spec.k = 1 + rng.below(d);
    spec.stride_feat = 1 + rng.below(3);
    spec.width = two_d ? 1 + rng.below(n) : 1;
    spec.stride_node = two_d ? 1 + rng.below(2) : 1;
    spec.filters = 1 + rng.below(3);

    auto map = random_matrix(d, n, rng);
    auto w = random_tensor(spec.filter_shape(n), rng);
    auto b = random_tensor({spec.filters}, rng);
    const auto out_shape = nfc_forward(map, w, &b, spec).values.size();
    std::vector<double> r(out_shape);
    for (auto& v : r) v = rng.uniform() - 0.5;
    auto loss = [&] { return dot(nfc_forward(map, w, &b, spec).values, r); };

    Tensor dout(nfc_forward(map, w, &b, spec).shape);
    dout.values = r;
    w.zero_grad();
    b.zero_grad();
    auto dmap = nfc_backward(map, w, &b, spec, dout);
    check_close(w.grad, numeric_grad(w.values, loss));
    check_close(b.grad, numeric_grad(b.values, loss));
    check_close(dmap.values(), numeric_grad(map.values(), loss));

    // affine + relu + dropout chain on a row batch
    const std::size_t rows = 1 + rng.below(6), in = 1 + rng.below(7), out = 1 + rng.below(5);
    auto x = random_matrix(rows, in, rng);
    auto aw = random_tensor({in, out}, rng);
    auto ab = random_tensor({out}, rng);
    DropoutMask mask;
    draw_dropout_mask(rows * out, 0.4, seed, mask);
    auto r2 = random_matrix(rows, out, rng);
    auto chain = [&] {
      auto y = relu_forward(affine_forward(x, aw, &ab));
      dropout_apply_inplace(y, mask);
      return dot(y.values(), r2.values());
    };
    const auto pre = affine_forward(x, aw, &ab);
    for (double v : pre.values()) REQUIRE(std::abs(v) > 1e-4);
    auto z = relu_forward(pre);
    aw.zero_grad();
    ab.zero_grad();
    auto dz = relu_backward(z, dropout_backward(r2, mask));
    auto dx = affine_backward(x, aw, &ab, dz);
    check_close(aw.grad, numeric_grad(aw.values, chain));
    check_close(ab.grad, numeric_grad(ab.values, chain));
    check_close(dx.values(), numeric_grad(x.values(), chain));
  }
}

TEST_CASE("convolution is linear in the map") {
  Rng rng(8);
  ConvSpec spec{ConvMode::kConv2D, 3, 2, 2, 1, 2, false};
  auto a = random_matrix(11, 4, rng), b = random_matrix(11, 4, rng);
  auto w = random_tensor(spec.filter_shape(4), rng);
  Matrix combo(11, 4);
  for (std::size_t i = 0; i < combo.size(); ++i) combo.values()[i] = 2.0 * a.values()[i] - 3.0 * b.values()[i];
  auto fa = nfc_forward(a, w, nullptr, spec), fb = nfc_forward(b, w, nullptr, spec);
  auto fc = nfc_forward(combo, w, nullptr, spec);
  for (std::size_t i = 0; i < fc.numel(); ++i)
    CHECK(fc.values[i] == doctest::Approx(2.0 * fa.values[i] - 3.0 * fb.values[i]).epsilon(1e-12));
}

TEST_CASE("a filter spanning the whole map is an affine layer") {
  Rng rng(9);
  const std::size_t d = 6, n = 3, c = 4;
  ConvSpec spec{ConvMode::kConv1D, d, 1, 1, 1, c, true};
  auto map = random_matrix(d, n, rng);
  auto w = random_tensor(spec.filter_shape(n), rng);
  auto b = random_tensor({c}, rng);
  Tensor wm({d * n, c});
  for (std::size_t f = 0; f < c; ++f)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t j = 0; j < n; ++j) wm.values[(a * n + j) * c + f] = w.values[(f * d + a) * n + j];
  auto conv = nfc_forward(map, w, &b, spec);
  auto aff = affine_forward(Matrix(1, d * n, map.values()), wm, &b);
  REQUIRE(conv.numel() == c);
  for (std::size_t f = 0; f < c; ++f) CHECK(conv.values[f] == doctest::Approx(aff(0, f)).epsilon(1e-12));
}

TEST_CASE("glorot range") {
  Rng rng(4);
  Tensor t({30, 20});
  glorot_uniform(t, 30, 20, rng);
  const double r = std::sqrt(6.0 / 50.0);
  double lo = 1, hi = -1;
  for (double v : t.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= -r);
  CHECK(hi <= r);
  CHECK(hi - lo > 1.8 * r);
}
