// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msvsr/data.hpp"
#include "msvsr/deform.hpp"
#include "msvsr/flow.hpp"
#include "msvsr/nn.hpp"

MSVSR_NAMESPACE_BEGIN

struct ModelConfig {
  std::string name = "custom";
  int channels = 16;
  int n_extract_blocks = 1;
  int n_fusion_blocks = 1;
  int n_propagation_branches = 2;  // even; alternating backward / forward
  int n_blocks_per_branch = 1;
  int n_recon_blocks = 1;
  int scale = 4;
  int deformable_groups = 0;  // 0 selects default_deformable_groups(channels)
  int deform_kernel_size = 3;
  bool use_lfm = true;
  bool use_ram = true;
  bool use_aux_loss = true;
  FlowPyramidConfig flow{3, 4, 5};

  void validate() const;
  int resolved_deformable_groups() const;
  /// Channel width inside the auxiliary head after pixel shuffle.
  int aux_channels() const;
};

/// "tiny", "pp-msvsr" or "pp-msvsr-l"; unknown ids raise ConfigError.
ModelConfig named_config(const std::string& id);
std::vector<std::string> named_config_ids();

void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

/// Flows between adjacent frames of a clip, each (B, 2, H, W).
///   to_next[t]: current t, source t + 1 (undefined for the last frame)
///   to_prev[t]: current t, source t - 1 (undefined for the first frame)
struct ClipFlows {
  std::vector<FlowField> to_next;
  std::vector<FlowField> to_prev;
};

/// Stage-2 result. Alignment params come from the last backward branch
/// (neighbor t + 1 onto t) and the last forward branch (t - 1 onto t); they are
/// absent where the neighbor does not exist.
struct Propagation {
  std::vector<Var> features;
  std::vector<std::optional<AlignmentParams>> from_next;
  std::vector<std::optional<AlignmentParams>> from_prev;
};

/// Batched network output; every list is indexed by time and holds
/// (B, 3, 4H, 4W) values.
struct NetOutput {
  std::vector<Var> sr;
  std::vector<Var> aux;  // empty unless use_aux_loss
  Propagation stage2;
};

struct ForwardOutput {
  FrameSequence sr_frames;
  std::optional<FrameSequence> aux_frames;
  std::vector<std::optional<AlignmentParams>> stage2_from_next;
  std::vector<std::optional<AlignmentParams>> stage2_from_prev;
};

/// Three-stage video super-resolution network. Every stage takes per-time
/// lists of (B, C, H, W) values; frames of a batch are independent clips.
class MsvsrNet {
 public:
  explicit MsvsrNet(const ModelConfig& cfg);
  MsvsrNet(const MsvsrNet&) = delete;
  MsvsrNet& operator=(const MsvsrNet&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  void initialize(std::uint64_t seed) { store_.initialize(seed); }

  std::vector<Var> extract_features(const std::vector<Var>& lr) const;
  ClipFlows compute_flows(const std::vector<Var>& lr) const;
  /// One LFM evaluation; inputs may carry any batch size.
  Var local_fusion(const Var& g_prev, const Var& g_cur, const Var& g_next, const FlowField& flow_to_prev,
                   const FlowField& flow_to_next) const;
  /// LFM over a clip with boundary duplication; identity when use_lfm is off.
  std::vector<Var> local_fusion(const std::vector<Var>& g, const ClipFlows& flows) const;
  Propagation propagate(const std::vector<Var>& fused, const ClipFlows& flows) const;
  /// Raises InvalidState when use_aux_loss is off.
  Var aux_head(const Var& f2, const Var& lr_frame) const;
  std::vector<Var> stage3_fuse(const Propagation& stage2, const ClipFlows& flows) const;
  Var reconstruct_upsample(const Var& f_aligned, const Var& lr_frame) const;

  NetOutput forward(const std::vector<Var>& lr) const;

 private:
  struct Branch {
    bool backward = true;
    FlowGuidedAlign align;
    ResidualStack backbone;
  };

  const Branch& last_branch(bool backward) const;

  ModelConfig cfg_;
  ParamStore store_;
  FlowNet flow_;
  ResidualStack extract_;
  FlowGuidedAlign lfm_align_;
  ResidualStack lfm_fuse_;
  std::vector<Branch> branches_;
  ReAlign ram_;
  ResidualStack stage3_fuse_;
  Conv2d aux_expand_;
  Conv2d aux_project_;
  std::vector<ResidualBlock> recon_blocks_;
  Conv2d up1_;
  Conv2d up2_;
  Conv2d conv_hr_;
  Conv2d conv_last_;
};

/// Frame-level inference on one clip. Outputs are clamped to [0, 1].
ForwardOutput forward(const MsvsrNet& net, const FrameSequence& lr);

struct ModelStats {
  std::size_t param_count = 0;
  std::map<std::string, std::size_t> per_module;
};
ModelStats model_stats(const ModelConfig& cfg);

/// Conversions between images and (1, C, H, W) / (B, C, H, W) tensors.
Tensor image_to_tensor(const Image& image);
Tensor stack_images(const std::vector<const Image*>& images);
/// Batch item `n` of a (B, C, H, W) tensor, optionally clamped to [0, 1].
Image tensor_to_image(const Tensor& t, int n = 0, bool clamp01 = true);

MSVSR_NAMESPACE_END
