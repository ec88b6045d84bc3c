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

// Serial reference kernels vs. the OpenMP kernels on Cora-sized inputs:
// 2708 nodes, 1433 bag-of-words features at ~1.3% density, bandwidth 6,
// k=32 s=16 c=64 convolution, 16 hidden units.

#include <benchmark/benchmark.h>

#include <vector>

#include "nfcgcn/kernels.hpp"
#include "nfcgcn/rng.hpp"
#include "nfcgcn/sampling.hpp"

namespace {

using namespace nfcgcn;

constexpr std::size_t kNodes = 2708;
constexpr std::size_t kFeatures = 1433;
constexpr std::size_t kBandwidth = 6;

struct Fixture {
  Matrix x{kNodes, kFeatures};
  kernels::SparseRows sparse;
  NeighborhoodTable table{kNodes, kBandwidth};
  kernels::ConvGeometry geo{kFeatures, kBandwidth, 32, kBandwidth, 16, 1, 64};
  std::vector<double> filters;
  std::vector<double> bias;
  Matrix h0;
  Matrix w;
  Matrix dout;

  Fixture() {
    Rng rng(42);
    for (auto& v : x.values()) v = rng.uniform() < 0.0127 ? 1.0 : 0.0;
    sparse = kernels::SparseRows::from_dense(x);
    for (std::size_t i = 0; i < kNodes; ++i) {
      auto row = table.row(i);
      row[0] = static_cast<NodeId>(i);
      for (std::size_t j = 1; j < kBandwidth; ++j) row[j] = static_cast<NodeId>(rng.below(kNodes));
    }
    filters.resize(geo.filter_size());
    for (auto& v : filters) v = rng.uniform() - 0.5;
    bias.assign(geo.filters, 0.1);
    h0 = Matrix(kNodes, geo.flat_size());
    for (auto& v : h0.values()) v = rng.uniform() - 0.5;
    w = Matrix(geo.flat_size(), 16);
    for (auto& v : w.values()) v = rng.uniform() - 0.5;
    dout = Matrix(kNodes, geo.flat_size());
    for (auto& v : dout.values()) v = rng.uniform() - 0.5;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_ConvForwardSerial(benchmark::State& state) {
  const auto& f = fixture();
  Matrix out;
  for (auto _ : state) {
    kernels::serial::conv_forward(f.x, f.table, f.geo, f.filters, f.bias, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ConvForwardSerial)->Unit(benchmark::kMillisecond);

void BM_ConvForwardParallel(benchmark::State& state) {
  const auto& f = fixture();
  kernels::set_num_threads(static_cast<int>(state.range(0)));
  Matrix out;
  for (auto _ : state) {
    kernels::parallel::conv_forward(f.sparse, f.table, f.geo, f.filters, f.bias, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ConvForwardParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ConvBackwardSerial(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<double> gw(f.filters.size()), gb(f.bias.size());
  for (auto _ : state) {
    kernels::serial::conv_backward(f.x, f.table, f.geo, f.dout, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
}
BENCHMARK(BM_ConvBackwardSerial)->Unit(benchmark::kMillisecond);

void BM_ConvBackwardParallel(benchmark::State& state) {
  const auto& f = fixture();
  kernels::set_num_threads(static_cast<int>(state.range(0)));
  std::vector<double> gw(f.filters.size()), gb(f.bias.size());
  for (auto _ : state) {
    kernels::parallel::conv_backward(f.sparse, f.table, f.geo, f.dout, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
}
BENCHMARK(BM_ConvBackwardParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_GemmSerial(benchmark::State& state) {
  const auto& f = fixture();
  Matrix out;
  for (auto _ : state) {
    kernels::serial::gemm(f.h0, f.w, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_GemmSerial)->Unit(benchmark::kMillisecond);

void BM_GemmParallel(benchmark::State& state) {
  const auto& f = fixture();
  kernels::set_num_threads(static_cast<int>(state.range(0)));
  Matrix out;
  for (auto _ : state) {
    kernels::parallel::gemm(f.h0, f.w, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_GemmParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_GemmTnSerial(benchmark::State& state) {
  const auto& f = fixture();
  Matrix grad(f.h0.cols(), 16);
  Matrix g(kNodes, 16, 0.5);
  for (auto _ : state) {
    kernels::serial::gemm_tn_acc(f.h0, g, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_GemmTnSerial)->Unit(benchmark::kMillisecond);

void BM_GemmTnParallel(benchmark::State& state) {
  const auto& f = fixture();
  kernels::set_num_threads(static_cast<int>(state.range(0)));
  Matrix grad(f.h0.cols(), 16);
  Matrix g(kNodes, 16, 0.5);
  for (auto _ : state) {
    kernels::parallel::gemm_tn_acc(f.h0, g, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_GemmTnParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
