// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msvsr/autograd.hpp"

MSVSR_NAMESPACE_BEGIN

/// Optimizer group a parameter belongs to; the flow estimator trains with its
/// own learning rate and can be frozen independently.
enum class ParamGroup { Main, Flow };

enum class Init {
  Default,   // U(-1/sqrt(fan_in), 1/sqrt(fan_in))
  Residual,  // U(-b, b), b = 0.1 * sqrt(6 / fan_in)
  Zero,
};

struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::Main;
  Init init = Init::Default;
  int fan_in = 1;
  Var var;
};

/// Owns every learnable tensor of a model, in registration order. Modules keep
/// Var handles that share storage with the entries here.
class ParamStore {
 public:
  Var create(const std::string& name, Shape shape, ParamGroup group, Init init, int fan_in);

  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  const Parameter* find(const std::string& name) const;

  std::size_t count() const;
  /// Counts grouped by the leading name component ("flow", "extract", ...).
  std::map<std::string, std::size_t> count_by_module() const;

  /// Deterministic initialization: parameters are filled in registration
  /// order from one generator seeded with `seed`.
  void initialize(std::uint64_t seed);
  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, int in_channels, int out_channels,
         int kernel_size, ParamGroup group = ParamGroup::Main, Init init = Init::Default);

  Var operator()(const Var& x) const;

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

  Var weight;
  Var bias;

 private:
  int in_ = 0;
  int out_ = 0;
  int padding_ = 0;
};

/// x + conv2(relu(conv1(x))), no normalization.
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(ParamStore& store, const std::string& name, int channels);
  Var operator()(const Var& x) const;

 private:
  Conv2d conv1_;
  Conv2d conv2_;
};

/// Input conv to `channels`, leaky ReLU, then `n_blocks` residual blocks.
class ResidualStack {
 public:
  ResidualStack() = default;
  ResidualStack(ParamStore& store, const std::string& name, int in_channels, int channels,
                int n_blocks);
  Var operator()(const Var& x) const;

 private:
  Conv2d input_;
  std::vector<ResidualBlock> blocks_;
};

MSVSR_NAMESPACE_END
