// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <json.hpp>

#include "msvsr/model.hpp"

MSVSR_NAMESPACE_BEGIN

struct LossConfig {
  double charbonnier_eps = 1e-12;
  double aux_weight = 1.0;
  bool aux_enabled = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const LossConfig& cfg);
void from_json(const nlohmann::json& j, LossConfig& cfg);

/// mean(sqrt((pred - gt)^2 + eps)) over all elements.
Var charbonnier(const Var& pred, const Var& gt, double eps);

/// Mean over frames of the per-frame charbonnier value.
Var aux_loss(const std::vector<Var>& aux, const std::vector<Var>& gt, double eps);

struct LossTerms {
  Var total;
  double main = 0;
  double aux = 0;  // 0 when the auxiliary term is not used
};

/// charbonnier(sr, gt) + aux_weight * aux_loss(aux, gt) when aux is enabled.
/// Requesting aux from an output without an auxiliary head raises
/// InvalidState.
LossTerms total_loss(const NetOutput& out, const std::vector<Var>& gt, const LossConfig& cfg);

MSVSR_NAMESPACE_END
