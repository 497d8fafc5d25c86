// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "msvsr/flow.hpp"
#include "msvsr/nn.hpp"

MSVSR_NAMESPACE_BEGIN

/// Deformable sampling parameters for a K x K kernel with G deformable groups.
///   offsets: (n, 2*K*K*G, h, w), channel (g*K*K + k)*2 holds dx and +1 holds dy
///            for tap k = ki*K + kj of group g
///   masks:   (n, K*K*G, h, w), channel g*K*K + k, values in [0, 1]
struct AlignmentParams {
  Var offsets;
  Var masks;
};

/// Weights of a modulated deformable convolution: weight is
/// (out, in / groups, K, K); input channels are split evenly into
/// `deformable_groups` consecutive blocks sharing one offset/mask set.
struct DeformKernel {
  Var weight;
  Var bias;
  int groups = 1;
  int deformable_groups = 1;

  DeformKernel() = default;
  DeformKernel(ParamStore& store, const std::string& name, int in_channels, int out_channels,
               int kernel_size, int n_deformable_groups, int n_groups = 1);

  int kernel_size() const { return weight.shape().h; }
};

/// out(p) = b + sum_k w_k * m_k(p) * in(p + r_k + offset_k(p)), bilinear
/// sampling with zero padding. Differentiable in input, offsets, masks and
/// kernel weights. Masks outside [0, 1] raise InvariantViolation.
Var deform_conv(const Var& input, const AlignmentParams& params, const DeformKernel& kernel);

/// Reference evaluation of deform_conv by explicit per-pixel, per-tap loops.
/// Intended for small inputs; shares no code with the production path.
Tensor deform_conv_oracle(const Tensor& input, const Tensor& offsets, const Tensor& masks,
                          const Tensor& weight, const Tensor& bias, int groups,
                          int deformable_groups);
Tensor deform_conv_oracle(const Tensor& input, const AlignmentParams& params,
                          const DeformKernel& kernel);

struct AlignResult {
  Var aligned;
  AlignmentParams params;
};

/// Default deformable group count for a channel width: 8 when channels >= 32,
/// otherwise 1.
int default_deformable_groups(int channels);

/// Flow-guided deformable alignment. Residual offsets and mask logits come
/// from three convolutions over concat(warp(neighbor, flow), current, flow);
/// offsets = flow (per tap) + residual, masks = sigmoid(logits), and the
/// unwarped neighbor is sampled by the deformable kernel.
class FlowGuidedAlign {
 public:
  FlowGuidedAlign() = default;
  FlowGuidedAlign(ParamStore& store, const std::string& name, int channels,
                  int deformable_groups, int kernel_size = 3);

  AlignResult operator()(const Var& neighbor, const Var& current, const FlowField& flow) const;

  const Conv2d& offset_head() const { return head_[2]; }
  const DeformKernel& kernel() const { return kernel_; }

 private:
  Conv2d head_[3];
  DeformKernel kernel_;
};

/// Re-alignment of a stage-2 neighbour feature: pre-align with the stage-2
/// params, predict residual offsets / mask increments from
/// concat(pre_aligned, current), then sample again with the summed params.
/// Summed masks are clamped to [0, 1].
class ReAlign {
 public:
  ReAlign() = default;
  ReAlign(ParamStore& store, const std::string& name, int channels, int deformable_groups,
          int kernel_size = 3);

  AlignResult operator()(const Var& current, const Var& neighbor,
                         const AlignmentParams& stage2) const;
  Var pre_align(const Var& neighbor, const AlignmentParams& stage2) const;

  const Conv2d& residual_head() const { return head_[1]; }
  const DeformKernel& kernel() const { return kernel_; }

 private:
  Conv2d head_[2];
  DeformKernel kernel_;
};

MSVSR_NAMESPACE_END
