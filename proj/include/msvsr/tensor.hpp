// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "msvsr/common.hpp"

MSVSR_NAMESPACE_BEGIN

/// Dense NCHW extent. Every tensor in the library is four-dimensional; scalars
/// are 1x1x1x1 and convolution weights use (out, in, kh, kw).
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor scalar(Real v) { return Tensor(Shape{1, 1, 1, 1}, v); }

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }

  Real* plane(int n, int c) {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }
  const Real* plane(int n, int c) const {
    return data_.data() + (static_cast<std::size_t>(n) * shape_.c + c) * shape_.plane();
  }

  Real& at(int n, int c, int h, int w) { return plane(n, c)[static_cast<std::size_t>(h) * shape_.w + w]; }
  Real at(int n, int c, int h, int w) const {
    return plane(n, c)[static_cast<std::size_t>(h) * shape_.w + w];
  }
  Real item() const;

  void fill(Real v);
  /// this += other (shapes must match).
  void add_(const Tensor& other);
  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

void require_same_shape(const Shape& a, const Shape& b, const char* what);

MSVSR_NAMESPACE_END
