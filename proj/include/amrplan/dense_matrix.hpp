// Copyright 2026 The amrplan Authors
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

#ifndef AMRPLAN_DENSE_MATRIX_HPP_
#define AMRPLAN_DENSE_MATRIX_HPP_

#include <cassert>
#include <span>
#include <vector>

namespace amrplan {

// Small row-major matrix for polytopes and decision-rule gains.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<size_t>(r) * cols_ + c];
  }

  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }
  std::span<double> row(int r) {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }

  double RowDot(int r, std::span<const double> x) const {
    assert(static_cast<int>(x.size()) == cols_);
    double s = 0.0;
    for (int c = 0; c < cols_; ++c) s += (*this)(r, c) * x[c];
    return s;
  }

  bool AllZero() const {
    for (double v : data_) {
      if (v != 0.0) return false;
    }
    return true;
  }

  bool operator==(const DenseMatrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace amrplan

#endif  // AMRPLAN_DENSE_MATRIX_HPP_
