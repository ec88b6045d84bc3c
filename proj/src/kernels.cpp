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

#include "nfcgcn/kernels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nfcgcn::kernels {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("kernel shape mismatch: ") + what);
}

void check_conv(const ConvGeometry& geo, std::size_t x_cols, const NeighborhoodTable& table,
                std::span<const double> filters, std::span<const double> bias) {
  require(x_cols == geo.feat_dim, "feature dimension");
  require(table.bandwidth() == geo.bandwidth, "bandwidth");
  require(geo.k >= 1 && geo.k <= geo.feat_dim, "filter length");
  require(geo.width >= 1 && geo.width <= geo.bandwidth, "filter width");
  require(geo.stride_feat >= 1 && geo.stride_node >= 1, "stride");
  require(filters.size() == geo.filter_size(), "filter bank size");
  require(bias.empty() || bias.size() == geo.filters, "bias size");
}

// Filters re-laid out as [a][b][f] so the innermost loop runs over filters.
std::vector<double> filters_by_position(const ConvGeometry& geo, std::span<const double> filters) {
  std::vector<double> t(filters.size());
  for (std::size_t f = 0; f < geo.filters; ++f) {
    for (std::size_t a = 0; a < geo.k; ++a) {
      for (std::size_t b = 0; b < geo.width; ++b) {
        t[(a * geo.width + b) * geo.filters + f] = filters[(f * geo.k + a) * geo.width + b];
      }
    }
  }
  return t;
}

constexpr std::size_t kNodeBlock = 64;
constexpr std::size_t kRowBlock = 32;

}  // namespace

SparseRows SparseRows::from_dense(const Matrix& m) {
  SparseRows s;
  s.rows = m.rows();
  s.cols = m.cols();
  s.row_ptr.reserve(m.rows() + 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) {
        s.col_idx.push_back(static_cast<std::uint32_t>(j));
        s.values.push_back(row[j]);
      }
    }
    s.row_ptr.push_back(s.col_idx.size());
  }
  return s;
}

void set_num_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// ---------------------------------------------------------------------------
// serial reference

namespace serial {

void gemm(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.rows(), "gemm inner dimension");
  c.reset(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
      c(i, j) = sum;
    }
  }
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.rows() == b.rows(), "gemm_tn inner dimension");
  require(c.rows() == a.cols() && c.cols() == b.cols(), "gemm_tn output");
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) sum += a(k, i) * b(k, j);
      c(i, j) += sum;
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.cols(), "gemm_nt inner dimension");
  c.reset(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(j, k);
      c(i, j) = sum;
    }
  }
}

void spmm(const NormalizedAdjacency& p, const Matrix& h, Matrix& c) {
  require(p.n == h.rows(), "spmm rows");
  c.reset(h.rows(), h.cols());
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
      for (std::size_t j = 0; j < h.cols(); ++j) c(i, j) += p.values[e] * h(p.col_idx[e], j);
    }
  }
}

void conv_forward(const Matrix& x, const NeighborhoodTable& table, const ConvGeometry& geo,
                  std::span<const double> filters, std::span<const double> bias, Matrix& out) {
  check_conv(geo, x.cols(), table, filters, bias);
  const std::size_t dp = geo.out_feat();
  const std::size_t np = geo.out_node();
  out.reset(table.num_nodes(), geo.flat_size());
  for (std::size_t i = 0; i < table.num_nodes(); ++i) {
    const auto members = table.row(i);
    for (std::size_t p = 0; p < dp; ++p) {
      for (std::size_t q = 0; q < np; ++q) {
        for (std::size_t f = 0; f < geo.filters; ++f) {
          double sum = bias.empty() ? 0.0 : bias[f];
          for (std::size_t a = 0; a < geo.k; ++a) {
            for (std::size_t b = 0; b < geo.width; ++b) {
              sum += x(members[q * geo.stride_node + b], p * geo.stride_feat + a) *
                     filters[(f * geo.k + a) * geo.width + b];
            }
          }
          out(i, (p * np + q) * geo.filters + f) = sum;
        }
      }
    }
  }
}

void conv_backward(const Matrix& x, const NeighborhoodTable& table, const ConvGeometry& geo, const Matrix& dout,
                   std::span<double> filter_grad, std::span<double> bias_grad) {
  check_conv(geo, x.cols(), table, filter_grad, bias_grad);
  require(dout.rows() == table.num_nodes() && dout.cols() == geo.flat_size(), "conv upstream gradient");
  const std::size_t dp = geo.out_feat();
  const std::size_t np = geo.out_node();
  for (std::size_t f = 0; f < geo.filters; ++f) {
    for (std::size_t a = 0; a < geo.k; ++a) {
      for (std::size_t b = 0; b < geo.width; ++b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < table.num_nodes(); ++i) {
          const auto members = table.row(i);
          for (std::size_t p = 0; p < dp; ++p) {
            for (std::size_t q = 0; q < np; ++q) {
              sum += dout(i, (p * np + q) * geo.filters + f) *
                     x(members[q * geo.stride_node + b], p * geo.stride_feat + a);
            }
          }
        }
        filter_grad[(f * geo.k + a) * geo.width + b] += sum;
      }
    }
    if (!bias_grad.empty()) {
      double sum = 0.0;
      for (std::size_t i = 0; i < table.num_nodes(); ++i) {
        for (std::size_t pq = 0; pq < dp * np; ++pq) sum += dout(i, pq * geo.filters + f);
      }
      bias_grad[f] += sum;
    }
  }
}

void neighborhood_mean(const Matrix& x, const NeighborhoodTable& table, Matrix& out) {
  out.reset(table.num_nodes(), x.cols());
  const double inv = 1.0 / static_cast<double>(table.bandwidth());
  for (std::size_t i = 0; i < table.num_nodes(); ++i) {
    for (NodeId m : table.row(i)) {
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += x(m, j);
    }
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) *= inv;
  }
}

void gemm_nt_masked(const Matrix& a, const Matrix& b, std::span<const std::uint8_t> keep, double scale, Matrix& c) {
  gemm_nt(a, b, c);
  require(keep.size() == c.size(), "gemm_nt mask size");
  for (std::size_t i = 0; i < c.size(); ++i) c.values()[i] = keep[i] ? c.values()[i] * scale : 0.0;
}

void conv_project(const Matrix& x, const NeighborhoodTable& table, const ConvGeometry& geo,
                  std::span<const double> filters, std::span<const double> bias, const Matrix& w, Matrix& out) {
  Matrix h;
  conv_forward(x, table, geo, filters, bias, h);
  gemm(h, w, out);
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP

namespace parallel {

namespace {

constexpr std::size_t kTile = 16;  // output columns held in registers

// out[0:w) = sum_k arow[k] * b[k * ldb + 0:w)
inline void row_times_panel(const double* arow, std::size_t inner, const double* b, std::size_t ldb, double* out,
                            std::size_t w) {
  if (w == kTile) {
    double acc[kTile] = {};
    for (std::size_t k = 0; k < inner; ++k) {
      const double v = arow[k];
      const double* br = b + k * ldb;
      for (std::size_t j = 0; j < kTile; ++j) acc[j] += v * br[j];
    }
    std::copy(acc, acc + kTile, out);
    return;
  }
  std::fill(out, out + w, 0.0);
  for (std::size_t k = 0; k < inner; ++k) {
    const double v = arow[k];
    const double* br = b + k * ldb;
    for (std::size_t j = 0; j < w; ++j) out[j] += v * br[j];
  }
}

// out[0:w) = sum_k arow[k] * bt[k * ldb + 0:w), bt being B transposed.
inline void dot_rows(const double* arow, std::size_t inner, const double* bt, std::size_t ldb, double* out,
                     std::size_t w) {
  row_times_panel(arow, inner, bt, ldb, out, w);
}

}  // namespace

void gemm(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.rows(), "gemm inner dimension");
  c.reset(a.rows(), b.cols());
  const std::size_t m = b.cols();
  const std::size_t inner = a.cols();
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* arow = a.data() + i * inner;
    double* out = c.data() + i * m;
    for (std::size_t j0 = 0; j0 < m; j0 += kTile) {
      row_times_panel(arow, inner, b.data() + j0, m, out + j0, std::min(kTile, m - j0));
    }
  }
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.rows() == b.rows(), "gemm_tn inner dimension");
  require(c.rows() == a.cols() && c.cols() == b.cols(), "gemm_tn output");
  const std::size_t m = b.cols();
  const std::size_t kdim = a.cols();
  const std::size_t n = a.rows();
  const auto blocks = static_cast<std::ptrdiff_t>((kdim + kRowBlock - 1) / kRowBlock);
  // Each block owns a disjoint band of C rows; every C entry sums over i in order.
#pragma omp parallel
  {
    std::vector<double> packed(kRowBlock * n);
    std::vector<double> tile(kTile);
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
      const std::size_t k0 = static_cast<std::size_t>(blk) * kRowBlock;
      const std::size_t kn = std::min(kdim, k0 + kRowBlock) - k0;
      // packed[r * n + i] = A(i, k0 + r)
      for (std::size_t i = 0; i < n; ++i) {
        const double* src = a.data() + i * kdim + k0;
        for (std::size_t r = 0; r < kn; ++r) packed[r * n + i] = src[r];
      }
      for (std::size_t r = 0; r < kn; ++r) {
        double* out = c.data() + (k0 + r) * m;
        for (std::size_t j0 = 0; j0 < m; j0 += kTile) {
          const std::size_t w = std::min(kTile, m - j0);
          row_times_panel(packed.data() + r * n, n, b.data() + j0, m, tile.data(), w);
          for (std::size_t j = 0; j < w; ++j) out[j0 + j] += tile[j];
        }
      }
    }
  }
}

namespace {

Matrix transposed(const Matrix& b) {
  Matrix t(b.cols(), b.rows());
  for (std::size_t i = 0; i < b.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) t(j, i) = b(i, j);
  }
  return t;
}

}  // namespace

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.cols(), "gemm_nt inner dimension");
  const Matrix bt = transposed(b);
  gemm(a, bt, c);
}

void spmm(const NormalizedAdjacency& p, const Matrix& h, Matrix& c) {
  require(p.n == h.rows(), "spmm rows");
  c.reset(h.rows(), h.cols());
  const std::size_t m = h.cols();
  const auto rows = static_cast<std::ptrdiff_t>(p.n);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* out = c.data() + i * m;
    for (std::size_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
      const double w = p.values[e];
      const double* src = h.data() + static_cast<std::size_t>(p.col_idx[e]) * m;
      for (std::size_t j = 0; j < m; ++j) out[j] += w * src[j];
    }
  }
}

namespace {

// Calls visit(offset_into_flat_output, offset_into_position_major_filters)
// for every (p, q, a, b) that a nonzero at feature row r of map column col
// contributes to; offsets are in units of `filters`.
template <typename Visit>
void for_each_tap(const ConvGeometry& geo, std::size_t r, std::size_t col, Visit&& visit) {
  const std::size_t dp = geo.out_feat();
  const std::size_t np = geo.out_node();
  const std::size_t p_hi = std::min(dp - 1, r / geo.stride_feat);
  const std::size_t p_lo = r + 1 > geo.k ? (r + 1 - geo.k + geo.stride_feat - 1) / geo.stride_feat : 0;
  const std::size_t q_hi = std::min(np - 1, col / geo.stride_node);
  const std::size_t q_lo = col + 1 > geo.width ? (col + 1 - geo.width + geo.stride_node - 1) / geo.stride_node : 0;
  for (std::size_t q = q_lo; q <= q_hi; ++q) {
    const std::size_t b = col - q * geo.stride_node;
    for (std::size_t p = p_lo; p <= p_hi && p < dp; ++p) {
      const std::size_t a = r - p * geo.stride_feat;
      visit((p * np + q) * geo.filters, (a * geo.width + b) * geo.filters);
    }
  }
}

}  // namespace

void conv_forward(const SparseRows& x, const NeighborhoodTable& table, const ConvGeometry& geo,
                  std::span<const double> filters, std::span<const double> bias, Matrix& out) {
  check_conv(geo, x.cols, table, filters, bias);
  const auto wt = filters_by_position(geo, filters);
  const std::size_t c = geo.filters;
  const std::size_t flat = geo.flat_size();
  out.reset(table.num_nodes(), flat);
  const auto nodes = static_cast<std::ptrdiff_t>(table.num_nodes());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t ii = 0; ii < nodes; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* row = out.data() + i * flat;
    if (!bias.empty()) {
      for (std::size_t o = 0; o < flat; o += c) std::copy(bias.begin(), bias.end(), row + o);
    }
    const auto members = table.row(i);
    for (std::size_t col = 0; col < members.size(); ++col) {
      const NodeId m = members[col];
      for (std::size_t e = x.row_ptr[m]; e < x.row_ptr[m + 1]; ++e) {
        const double v = x.values[e];
        for_each_tap(geo, x.col_idx[e], col, [&](std::size_t o, std::size_t w) {
          double* dst = row + o;
          const double* src = wt.data() + w;
          for (std::size_t f = 0; f < c; ++f) dst[f] += v * src[f];
        });
      }
    }
  }
}

void conv_backward(const SparseRows& x, const NeighborhoodTable& table, const ConvGeometry& geo, const Matrix& dout,
                   std::span<double> filter_grad, std::span<double> bias_grad) {
  check_conv(geo, x.cols, table, filter_grad, bias_grad);
  require(dout.rows() == table.num_nodes() && dout.cols() == geo.flat_size(), "conv upstream gradient");
  const std::size_t c = geo.filters;
  const std::size_t flat = geo.flat_size();
  const std::size_t wsize = geo.filter_size();
  const std::size_t nblocks = (table.num_nodes() + kNodeBlock - 1) / kNodeBlock;
  // Per-block partials [position-major filter grads | bias grads].
  std::vector<double> partial(nblocks * (wsize + c), 0.0);
  const auto blocks = static_cast<std::ptrdiff_t>(nblocks);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    double* gw = partial.data() + static_cast<std::size_t>(blk) * (wsize + c);
    double* gb = gw + wsize;
    const std::size_t i0 = static_cast<std::size_t>(blk) * kNodeBlock;
    const std::size_t i1 = std::min(table.num_nodes(), i0 + kNodeBlock);
    for (std::size_t i = i0; i < i1; ++i) {
      const double* g = dout.data() + i * flat;
      for (std::size_t o = 0; o < flat; o += c) {
        for (std::size_t f = 0; f < c; ++f) gb[f] += g[o + f];
      }
      const auto members = table.row(i);
      for (std::size_t col = 0; col < members.size(); ++col) {
        const NodeId m = members[col];
        for (std::size_t e = x.row_ptr[m]; e < x.row_ptr[m + 1]; ++e) {
          const double v = x.values[e];
          for_each_tap(geo, x.col_idx[e], col, [&](std::size_t o, std::size_t w) {
            double* dst = gw + w;
            const double* src = g + o;
            for (std::size_t f = 0; f < c; ++f) dst[f] += v * src[f];
          });
        }
      }
    }
  }
  std::vector<double> total(wsize + c, 0.0);
  for (std::size_t blk = 0; blk < nblocks; ++blk) {
    const double* src = partial.data() + blk * (wsize + c);
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += src[j];
  }
  for (std::size_t f = 0; f < c; ++f) {
    for (std::size_t a = 0; a < geo.k; ++a) {
      for (std::size_t b = 0; b < geo.width; ++b) {
        filter_grad[(f * geo.k + a) * geo.width + b] += total[(a * geo.width + b) * c + f];
      }
    }
  }
  if (!bias_grad.empty()) {
    for (std::size_t f = 0; f < c; ++f) bias_grad[f] += total[wsize + f];
  }
}

void neighborhood_mean(const Matrix& x, const NeighborhoodTable& table, Matrix& out) {
  out.reset(table.num_nodes(), x.cols());
  const double inv = 1.0 / static_cast<double>(table.bandwidth());
  const std::size_t d = x.cols();
  const auto nodes = static_cast<std::ptrdiff_t>(table.num_nodes());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < nodes; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* dst = out.data() + i * d;
    for (NodeId m : table.row(i)) {
      const double* src = x.data() + static_cast<std::size_t>(m) * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
    for (std::size_t j = 0; j < d; ++j) dst[j] *= inv;
  }
}

void gemm_nt_masked(const Matrix& a, const Matrix& b, std::span<const std::uint8_t> keep, double scale, Matrix& c) {
  require(a.cols() == b.cols(), "gemm_nt inner dimension");
  require(keep.size() == a.rows() * b.rows(), "gemm_nt mask size");
  const Matrix bt = transposed(b);
  c.reset(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  const std::size_t cols = b.rows();
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* arow = a.data() + i * inner;
    const std::uint8_t* krow = keep.data() + i * cols;
    double* out = c.data() + i * cols;
    for (std::size_t j0 = 0; j0 < cols; j0 += kTile) {
      const std::size_t w = std::min(kTile, cols - j0);
      dot_rows(arow, inner, bt.data() + j0, cols, out + j0, w);
      for (std::size_t j = j0; j < j0 + w; ++j) out[j] *= static_cast<double>(krow[j]) * scale;
    }
  }
}

void conv_project(const SparseRows& x, const NeighborhoodTable& table, const ConvGeometry& geo,
                  std::span<const double> filters, std::span<const double> bias, const Matrix& w, Matrix& out) {
  check_conv(geo, x.cols, table, filters, bias);
  require(w.rows() == geo.flat_size(), "projection rows");
  const auto wt = filters_by_position(geo, filters);
  const std::size_t c = geo.filters;
  const std::size_t m = w.cols();
  const std::size_t n = geo.bandwidth;
  // proj[(r * n + col) * m + j]: output j per unit value at feature r of map column col.
  std::vector<double> proj(geo.feat_dim * n * m, 0.0);
  const auto feats = static_cast<std::ptrdiff_t>(geo.feat_dim);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < feats; ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    for (std::size_t col = 0; col < n; ++col) {
      double* dst = proj.data() + (r * n + col) * m;
      for_each_tap(geo, r, col, [&](std::size_t o, std::size_t wpos) {
        for (std::size_t f = 0; f < c; ++f) {
          const double coef = wt[wpos + f];
          const double* wrow = w.data() + (o + f) * m;
          for (std::size_t j = 0; j < m; ++j) dst[j] += coef * wrow[j];
        }
      });
    }
  }
  std::vector<double> base(m, 0.0);
  if (!bias.empty()) {
    for (std::size_t o = 0; o < geo.flat_size(); o += c) {
      for (std::size_t f = 0; f < c; ++f) {
        const double* wrow = w.data() + (o + f) * m;
        for (std::size_t j = 0; j < m; ++j) base[j] += bias[f] * wrow[j];
      }
    }
  }
  out.reset(table.num_nodes(), m);
  const auto nodes = static_cast<std::ptrdiff_t>(table.num_nodes());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t ii = 0; ii < nodes; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* row = out.data() + i * m;
    std::copy(base.begin(), base.end(), row);
    const auto members = table.row(i);
    for (std::size_t col = 0; col < members.size(); ++col) {
      const NodeId mem = members[col];
      for (std::size_t e = x.row_ptr[mem]; e < x.row_ptr[mem + 1]; ++e) {
        const double v = x.values[e];
        const double* src = proj.data() + (static_cast<std::size_t>(x.col_idx[e]) * n + col) * m;
        for (std::size_t j = 0; j < m; ++j) row[j] += v * src[j];
      }
    }
  }
}

}  // namespace parallel

}  // namespace nfcgcn::kernels
