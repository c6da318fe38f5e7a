// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace frdiff {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;

/// Dense row-major array of doubles.
///
/// Storage is shared and immutable once constructed; every op returns a new
/// tensor. A tensor may additionally carry a handle into a gradient tape, in
/// which case ops executed while that tape is active record themselves.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor full(Shape shape, double value);

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return data_ ? data_->size() : 0; }

  std::span<const double> values() const;
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double item() const;
  std::vector<double> to_vector() const;

  bool shares_storage(const Tensor& other) const { return data_ == other.data_; }
  // Same storage viewed with another shape of equal element count; detached.
  Tensor with_shape(Shape shape) const;

  // True when this tensor participates in the tape that is active on the
  // calling thread.
  bool tracked() const;
  int grad_id() const { return grad_id_; }
  Tensor detach() const;

 private:
  friend class Tape;

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  int grad_id_ = -1;
};

bool bit_equal(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace frdiff
