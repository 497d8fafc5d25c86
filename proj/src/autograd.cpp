// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/autograd.hpp"

#include <unordered_set>
#include <utility>

MSVSR_NAMESPACE_BEGIN

namespace detail {

void Node::accumulate(const Tensor& g) {
  if (grad.empty()) {
    grad = g;
  } else {
    grad.add_(g);
  }
}

}  // namespace detail

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool NoGradGuard::grad_enabled() { return g_grad_enabled; }

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Var::grad() const {
  if (!node_) return {};
  if (node_->grad.empty()) return Tensor(node_->value.shape());
  return node_->grad;
}

void Var::zero_grad() {
  if (node_) node_->grad = Tensor();
}

void Var::accumulate_grad(const Tensor& g) const {
  if (node_ && node_->requires_grad) node_->accumulate(g);
}

Var Var::from_op(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  Var out(std::move(value));
  if (!g_grad_enabled) return out;
  for (const Var& in : inputs) {
    if (in.requires_grad()) {
      out.node_->requires_grad = true;
      break;
    }
  }
  if (out.node_->requires_grad) {
    for (const Var& in : inputs) {
      if (in.requires_grad()) out.node_->inputs.push_back(in.node_);
    }
    out.node_->backward = std::move(backward);
  }
  return out;
}

void Var::backward() const {
  MSVSR_CHECK(node_ && node_->value.numel() == 1, InvalidState,
              "backward() requires a scalar output");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->accumulate(Tensor::scalar(Real(1)));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (!node->backward) continue;  // leaf: keep its gradient
    if (!node->grad.empty()) node->backward(node->grad, node->value);
    node->grad = Tensor();
  }
}

MSVSR_NAMESPACE_END
