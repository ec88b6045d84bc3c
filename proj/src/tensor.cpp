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

#include "nfcgcn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nfcgcn/error.hpp"

namespace nfcgcn {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: value count " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

void Matrix::reset(std::size_t rows, std::size_t cols, double v) {
  rows_ = rows;
  cols_ = cols;
  data_.assign(rows * cols, v);
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::size_t shape_product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> dims)
    : shape(std::move(dims)), values(shape_product(shape), 0.0), grad(values.size(), 0.0) {}

void Tensor::zero_grad() {
  grad.assign(values.size(), 0.0);
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void check_finite(std::span<const double> values, const std::string& where) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError("non-finite value at index " + std::to_string(i) + " in " + where);
    }
  }
}

}  // namespace nfcgcn
