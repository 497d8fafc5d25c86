// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/losses.hpp"

#include <cmath>

#include <fmt/format.h>

#include "msvsr/ops.hpp"

MSVSR_NAMESPACE_BEGIN

void LossConfig::validate() const {
  MSVSR_CHECK(charbonnier_eps > 0, ConfigError, "charbonnier_eps must be > 0");
  MSVSR_CHECK(aux_weight >= 0, ConfigError, "aux_weight must be >= 0");
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  j = nlohmann::json{{"charbonnier_eps", c.charbonnier_eps},
                     {"aux_weight", c.aux_weight},
                     {"aux_enabled", c.aux_enabled}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  c = LossConfig{};
  c.charbonnier_eps = j.value("charbonnier_eps", c.charbonnier_eps);
  c.aux_weight = j.value("aux_weight", c.aux_weight);
  c.aux_enabled = j.value("aux_enabled", c.aux_enabled);
}

Var charbonnier(const Var& pred, const Var& gt, double eps) {
  require_same_shape(pred.shape(), gt.shape(), "charbonnier");
  MSVSR_CHECK(eps > 0, InvalidArgument, "charbonnier eps must be > 0");
  const Tensor& p = pred.value();
  const Tensor& g = gt.value();
  const std::size_t n = p.numel();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(p.data()[i]) - g.data()[i];
    acc += std::sqrt(d * d + eps);
  }
  const Tensor value = Tensor::scalar(static_cast<Real>(acc / static_cast<double>(n)));
  return Var::from_op(value, {pred, gt}, [pred, gt, eps, n](const Tensor& go, const Tensor&) {
    const Tensor& p = pred.value();
    const Tensor& g = gt.value();
    const double s = static_cast<double>(go.item()) / static_cast<double>(n);
    Tensor gp(p.shape());
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(p.data()[i]) - g.data()[i];
      gp.data()[i] = static_cast<Real>(s * d / std::sqrt(d * d + eps));
    }
    if (gt.requires_grad()) {
      Tensor gg(gp.shape());
      for (std::size_t i = 0; i < n; ++i) gg.data()[i] = -gp.data()[i];
      gt.accumulate_grad(gg);
    }
    pred.accumulate_grad(gp);
  });
}

Var aux_loss(const std::vector<Var>& aux, const std::vector<Var>& gt, double eps) {
  MSVSR_CHECK(aux.size() == gt.size() && !aux.empty(), ShapeMismatch,
              fmt::format("aux_loss: {} frames vs {} ground-truth frames", aux.size(), gt.size()));
  Var sum = charbonnier(aux[0], gt[0], eps);
  for (std::size_t t = 1; t < aux.size(); ++t) sum = sum + charbonnier(aux[t], gt[t], eps);
  return aux.size() == 1 ? sum : sum * static_cast<Real>(1.0 / static_cast<double>(aux.size()));
}

LossTerms total_loss(const NetOutput& out, const std::vector<Var>& gt, const LossConfig& cfg) {
  cfg.validate();
  MSVSR_CHECK(out.sr.size() == gt.size() && !gt.empty(), ShapeMismatch,
              fmt::format("total_loss: {} outputs vs {} ground-truth frames", out.sr.size(), gt.size()));
  const Var main = charbonnier(concat_batch(out.sr), concat_batch(gt), cfg.charbonnier_eps);
  LossTerms terms;
  terms.total = main;
  terms.main = main.value().item();
  if (!cfg.aux_enabled) return terms;
  MSVSR_CHECK(!out.aux.empty(), InvalidState, "total_loss: auxiliary loss requested but the model has no auxiliary head");
  const Var aux = aux_loss(out.aux, gt, cfg.charbonnier_eps);
  terms.aux = aux.value().item();
  if (cfg.aux_weight > 0) terms.total = main + aux * static_cast<Real>(cfg.aux_weight);
  return terms;
}

MSVSR_NAMESPACE_END
