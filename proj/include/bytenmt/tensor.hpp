// Copyright (c) 2026 The bytenmt Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bytenmt {

/// Dense row-major 2-D array of scalars. Rank-1 data is stored as a single
/// row; a scalar parameter is a 1x1 tensor. Storage is kept aligned so the
/// vectorized kernels take the same code path on every run — unaligned
/// buffers would make accumulation order, and thus float rounding, depend
/// on where the allocator happened to place them.
template <typename T>
struct Tensor {
  using Scalar = T;
  using EigenMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Map = Eigen::Map<EigenMat>;
  using ConstMap = Eigen::Map<const EigenMat>;

  int rows = 0;
  int cols = 0;
  std::vector<T, Eigen::aligned_allocator<T>> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }

  static Tensor full(int r, int c, T v) {
    Tensor t(r, c);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static Tensor scalar(T v) { return full(1, 1, v); }

  bool empty() const { return data.empty(); }
  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  T& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  const T& operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  T* row_ptr(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const T* row_ptr(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

  Map map() { return Map(data.data(), rows, cols); }
  ConstMap map() const { return ConstMap(data.data(), rows, cols); }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  void add_inplace(const Tensor& o) {
    check_same_shape(o);
    map() += o.map();
  }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  void check_same_shape(const Tensor& o) const {
    if (!same_shape(o)) throw std::invalid_argument("tensor shape mismatch");
  }
};

// out = a . b
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
  Tensor<T> out(a.rows, b.cols);
  out.map().noalias() = a.map() * b.map();
  return out;
}

// out = a . b^T
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: inner dimensions differ");
  Tensor<T> out(a.rows, b.rows);
  out.map().noalias() = a.map() * b.map().transpose();
  return out;
}

// out = a^T . b
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: inner dimensions differ");
  Tensor<T> out(a.cols, b.cols);
  out.map().noalias() = a.map().transpose() * b.map();
  return out;
}

}  // namespace bytenmt
