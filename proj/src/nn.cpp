// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/nn.hpp"

#include <cmath>

#include "msvsr/ops.hpp"
#include "msvsr/random.hpp"

MSVSR_NAMESPACE_BEGIN

Var ParamStore::create(const std::string& name, Shape shape, ParamGroup group, Init init,
                       int fan_in) {
  MSVSR_CHECK(find(name) == nullptr, InvalidArgument, "duplicate parameter " + name);
  Var v(Tensor(shape), true);
  params_.push_back(Parameter{name, group, init, fan_in, v});
  return v;
}

const Parameter* ParamStore::find(const std::string& name) const {
  for (const Parameter& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

std::size_t ParamStore::count() const {
  std::size_t total = 0;
  for (const Parameter& p : params_) total += p.var.value().numel();
  return total;
}

std::map<std::string, std::size_t> ParamStore::count_by_module() const {
  std::map<std::string, std::size_t> out;
  for (const Parameter& p : params_) out[p.name.substr(0, p.name.find('.'))] += p.var.value().numel();
  return out;
}

void ParamStore::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter& p : params_) {
    Tensor& t = p.var.mutable_value();
    double bound = 0;
    switch (p.init) {
      case Init::Default: bound = 1.0 / std::sqrt(static_cast<double>(p.fan_in)); break;
      case Init::Residual: bound = 0.1 * std::sqrt(6.0 / p.fan_in); break;
      case Init::Zero: bound = 0; break;
    }
    for (Real& v : t.values()) v = bound == 0 ? Real(0) : static_cast<Real>(rng.uniform(-bound, bound));
    p.var.zero_grad();
  }
}

void ParamStore::zero_grad() {
  for (Parameter& p : params_) p.var.zero_grad();
}

Conv2d::Conv2d(ParamStore& store, const std::string& name, int in_channels, int out_channels,
               int kernel_size, ParamGroup group, Init init)
    : in_(in_channels), out_(out_channels), padding_(kernel_size / 2) {
  MSVSR_CHECK(kernel_size % 2 == 1, InvalidArgument, "conv kernel size must be odd");
  const int fan_in = in_channels * kernel_size * kernel_size;
  weight = store.create(name + ".weight", Shape{out_channels, in_channels, kernel_size, kernel_size},
                        group, init, fan_in);
  bias = store.create(name + ".bias", Shape{1, out_channels, 1, 1}, group, Init::Zero, fan_in);
}

Var Conv2d::operator()(const Var& x) const { return conv2d(x, weight, bias, padding_); }

ResidualBlock::ResidualBlock(ParamStore& store, const std::string& name, int channels)
    : conv1_(store, name + ".conv1", channels, channels, 3, ParamGroup::Main, Init::Residual),
      conv2_(store, name + ".conv2", channels, channels, 3, ParamGroup::Main, Init::Residual) {}

Var ResidualBlock::operator()(const Var& x) const { return x + conv2_(relu(conv1_(x))); }

ResidualStack::ResidualStack(ParamStore& store, const std::string& name, int in_channels,
                             int channels, int n_blocks)
    : input_(store, name + ".input", in_channels, channels, 3) {
  for (int i = 0; i < n_blocks; ++i)
    blocks_.emplace_back(store, name + ".blocks." + std::to_string(i), channels);
}

Var ResidualStack::operator()(const Var& x) const {
  Var h = leaky_relu(input_(x));
  for (const ResidualBlock& b : blocks_) h = b(h);
  return h;
}

MSVSR_NAMESPACE_END
