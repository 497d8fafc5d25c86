// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "msvsr/tensor.hpp"

MSVSR_NAMESPACE_BEGIN

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Propagates this node's gradient into `inputs`; receives the node's own
  // forward value so closures need not copy it.
  std::function<void(const Tensor& grad_out, const Tensor& value)> backward;

  void accumulate(const Tensor& g);
};

}  // namespace detail

/// Handle to a value in the dynamic computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  /// Direct mutation; only meaningful for leaves (parameters, inputs).
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  /// Accumulated gradient; zeros of the value's shape if nothing accumulated.
  Tensor grad() const;
  void zero_grad();

  /// Reverse-mode sweep from a scalar (1x1x1x1) output, seeded with 1.
  void backward() const;

  /// Builds an op result. The backward closure is kept only when some input
  /// participates in differentiation, so inference builds no graph.
  using BackwardFn = std::function<void(const Tensor& grad_out, const Tensor& value)>;
  static Var from_op(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  /// Accumulates into this node's gradient (used by op backward closures).
  void accumulate_grad(const Tensor& g) const;

 private:
  std::shared_ptr<detail::Node> node_;
};

/// While alive, ops on this thread record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool grad_enabled();

 private:
  bool previous_;
};

MSVSR_NAMESPACE_END
