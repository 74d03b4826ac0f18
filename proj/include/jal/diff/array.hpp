// Copyright 2026 The Joint Auction Lab Authors.
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

#ifndef JAL_DIFF_ARRAY_HPP_
#define JAL_DIFF_ARRAY_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace jal::diff {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major array of doubles.
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> data);

  static Array scalar(double x) { return Array(Shape{}, std::vector<double>{x}); }
  static Array from(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  // Extent along `axis`; negative axes count from the back.
  std::size_t dim(int axis) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double> to_vector() const { return {data_.begin(), data_.end()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  // Value of a single-element array.
  double item() const;

  void fill(double x);
  Array reshaped(Shape shape) const;
  bool all_finite() const;

 private:
  using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

  Shape shape_;
  Storage data_;
};

// Normalises a possibly negative axis against `rank`.
std::size_t normalize_axis(int axis, std::size_t rank);

}  // namespace jal::diff

#endif  // JAL_DIFF_ARRAY_HPP_
