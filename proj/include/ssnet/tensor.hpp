// Copyright 2026 The ssnet Authors
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

#ifndef SSNET_TENSOR_HPP_
#define SSNET_TENSOR_HPP_

#include <Eigen/Core>

#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "ssnet/common.hpp"

namespace ssnet {

// Dense row-major float tensor, rank 1..4. Deliberately minimal: contiguous
// storage plus shape bookkeeping; all heavy lifting happens through Eigen
// maps over the raw buffer.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<i64> shape) : shape_(std::move(shape)) {
    check_arg(!shape_.empty() && shape_.size() <= 4, "tensor rank must be 1..4");
    i64 n = 1;
    for (i64 d : shape_) {
      check_arg(d > 0, "tensor dims must be positive");
      n *= d;
    }
    data_.assign(static_cast<size_t>(n), 0.0f);
  }

  static Tensor zeros(std::vector<i64> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<i64> shape, float v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
  }

  static Tensor from(std::vector<i64> shape, std::vector<float> values) {
    Tensor t(std::move(shape));
    check_arg(values.size() == t.data_.size(), "value count does not match shape");
    t.data_ = std::move(values);
    return t;
  }

  const std::vector<i64>& shape() const { return shape_; }
  i64 dim(size_t i) const { return shape_.at(i); }
  size_t rank() const { return shape_.size(); }
  i64 numel() const { return static_cast<i64>(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& vec() { return data_; }
  const std::vector<float>& vec() const { return data_; }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0f); }

  float& operator[](i64 i) { return data_[static_cast<size_t>(i)]; }
  float operator[](i64 i) const { return data_[static_cast<size_t>(i)]; }

  float& at(i64 i, i64 j) { return data_[static_cast<size_t>(i * shape_[1] + j)]; }
  float at(i64 i, i64 j) const { return data_[static_cast<size_t>(i * shape_[1] + j)]; }

  float& at(i64 i, i64 j, i64 k) {
    return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  float at(i64 i, i64 j, i64 k) const {
    return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }

  float& at(i64 i, i64 j, i64 k, i64 l) {
    return data_[static_cast<size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }
  float at(i64 i, i64 j, i64 k, i64 l) const {
    return data_[static_cast<size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }

  // Same storage, new shape.
  Tensor reshaped(std::vector<i64> shape) const {
    Tensor t;
    t.shape_ = std::move(shape);
    i64 n = 1;
    for (i64 d : t.shape_) n *= d;
    check_arg(n == numel(), "reshape must preserve element count");
    t.data_ = data_;
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (float v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::vector<i64> shape_;
  std::vector<float> data_;
};

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline MatMap as_matrix(Tensor& t, i64 rows, i64 cols) {
  check_arg(rows * cols == t.numel(), "matrix view must cover the tensor");
  return MatMap(t.data(), rows, cols);
}

inline ConstMatMap as_matrix(const Tensor& t, i64 rows, i64 cols) {
  check_arg(rows * cols == t.numel(), "matrix view must cover the tensor");
  return ConstMatMap(t.data(), rows, cols);
}

}  // namespace ssnet

#endif  // SSNET_TENSOR_HPP_
