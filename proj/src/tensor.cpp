// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

MSVSR_NAMESPACE_BEGIN

std::string Shape::str() const { return fmt::format("[{}, {}, {}, {}]", n, c, h, w); }

Tensor::Tensor(Shape shape, Real fill) : shape_(shape), data_(shape.numel(), fill) {
  MSVSR_CHECK(shape.n >= 0 && shape.c >= 0 && shape.h >= 0 && shape.w >= 0, InvalidArgument,
              "negative tensor extent " + shape.str());
}

Tensor::Tensor(Shape shape, std::vector<Real> values) : shape_(shape), data_(std::move(values)) {
  MSVSR_CHECK(data_.size() == shape.numel(), ShapeMismatch,
              fmt::format("{} values for shape {}", data_.size(), shape.str()));
}

Real Tensor::item() const {
  MSVSR_CHECK(data_.size() == 1, ShapeMismatch, "item() on tensor of shape " + shape_.str());
  return data_[0];
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_(const Tensor& other) {
  require_same_shape(shape_, other.shape_, "add_");
  const Real* src = other.data();
  Real* dst = data();
  for (std::size_t i = 0; i < data_.size(); ++i) dst[i] += src[i];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) raise(ErrorKind::ShapeMismatch, fmt::format("{}: {} vs {}", what, a.str(), b.str()));
}

MSVSR_NAMESPACE_END
