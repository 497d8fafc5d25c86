// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "msvsr/nn.hpp"

MSVSR_NAMESPACE_BEGIN

/// A flow field is a (n, 2, h, w) Var: channel 0 is dx, channel 1 is dy, in
/// pixels, mapping current-frame coordinates to source-frame coordinates.
using FlowField = Var;

/// Backward bilinear warp: out(p) = src(p + flow(p)), zero outside the frame.
/// Differentiable in both `src` and `flow`.
Var warp(const Var& src, const FlowField& flow);

struct FlowPyramidConfig {
  int n_levels = 5;
  int base_channels = 8;
  int kernel_size = 7;

  void validate() const;
};

/// Coarse-to-fine pyramid flow estimator. Level 0 is the coarsest; each level
/// refines the 2x-upsampled (and 2x-scaled) coarser flow with a residual
/// predicted from concat(ref, warp(sup, flow), flow) by five convolutions
/// (8 -> 2b -> 4b -> 2b -> b -> 2 channels, ReLU between).
class FlowNet {
 public:
  FlowNet() = default;
  FlowNet(ParamStore& store, const std::string& name, const FlowPyramidConfig& cfg);

  /// Flow such that warp(sup, flow) approximates ref. Inputs are (n, 3, h, w);
  /// extents not divisible by 2^(levels-1) are zero-padded and the result
  /// cropped back.
  FlowField operator()(const Var& ref, const Var& sup) const;

  /// Flow after every level, coarsest first (pre-crop, padded extents).
  std::vector<FlowField> pyramid(const Var& ref, const Var& sup) const;

  const FlowPyramidConfig& config() const { return cfg_; }

 private:
  struct Level {
    std::vector<Conv2d> convs;
  };

  FlowPyramidConfig cfg_;
  std::vector<Level> levels_;
};

MSVSR_NAMESPACE_END
