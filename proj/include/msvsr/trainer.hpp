// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msvsr/losses.hpp"
#include "msvsr/metrics.hpp"
#include "msvsr/model.hpp"
#include "msvsr/random.hpp"

MSVSR_NAMESPACE_BEGIN

struct TrainConfig {
  int total_iters = 2000;
  double lr_main_init = 2e-4;
  double lr_flow_init = 2e-5;
  double lr_final = 2e-7;
  int flow_freeze_iters = 100;
  int batch_size = 2;
  int patch_size = 32;
  int n_frames = 5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  double adam_eps = 1e-8;
  double grad_clip = 10.0;  // global L2 norm; <= 0 disables
  std::uint64_t seed = 0;
  LossConfig loss;

  void validate() const;
};

/// Full-scale schedule: 300k iterations, batch 16, 64x64 LR patches, flow
/// frozen for the first 2,500 iterations.
TrainConfig full_scale_train_config();
/// Proportionally reduced defaults for CPU runs.
TrainConfig desk_train_config();

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

enum class LrGroup { Main, Flow };

/// Cosine annealing from the group's initial rate to lr_final over
/// total_iters; the flow group is 0 while iter < flow_freeze_iters.
double lr_at(int iter, const TrainConfig& cfg, LrGroup group);

/// Adam moments for every parameter, keyed by parameter name.
struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  std::int64_t steps_main = 0;
  std::int64_t steps_flow = 0;
};

struct LossRecord {
  int iter = 0;
  double lr_main = 0;
  double lr_flow = 0;
  double loss_main = 0;
  double loss_aux = 0;
  double loss_total = 0;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  int iteration = 0;
  ModelConfig model_cfg;
  TrainConfig train_cfg;
  std::vector<NamedTensor> weights;
  AdamState adam;
  std::string rng_state;
};

constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary archive: magic, version, JSON metadata, named float32 arrays
/// (little endian) and a trailing CRC-32 over everything before it.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Raises NotFound, ChecksumMismatch (truncated / corrupt) or VersionError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint weights into a freshly built network.
std::unique_ptr<MsvsrNet> build_model(const Checkpoint& ckpt);
std::vector<NamedTensor> snapshot_weights(const MsvsrNet& net);

/// Single-process optimization loop. Batches are drawn from one seeded
/// generator: a clip index, then a patch seed, per batch item.
class Trainer {
 public:
  Trainer(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const Dataset& data);
  /// Resumes from a checkpoint; the checkpoint's configs are used.
  Trainer(const Checkpoint& ckpt, const Dataset& data);

  /// One optimization step at the current iteration. Raises
  /// NumericalDivergence on a non-finite loss (weights untouched).
  LossRecord step();
  int iteration() const { return iteration_; }
  bool done() const { return iteration_ >= train_cfg_.total_iters; }

  Checkpoint checkpoint() const;
  MsvsrNet& model() { return *net_; }
  const MsvsrNet& model() const { return *net_; }
  const TrainConfig& train_config() const { return train_cfg_; }
  const std::vector<LossRecord>& history() const { return history_; }

 private:
  void check_data() const;

  ModelConfig model_cfg_;
  TrainConfig train_cfg_;
  const Dataset& data_;
  std::unique_ptr<MsvsrNet> net_;
  AdamState adam_;
  Rng rng_;
  int iteration_ = 0;
  std::vector<LossRecord> history_;
};

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;  // checkpoints + loss CSV
  int checkpoint_every = 0;                      // 0: final checkpoint only
  std::optional<Checkpoint> resume;
  std::function<void(const LossRecord&)> on_step;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> history;
};

/// Runs until total_iters. On divergence the last written checkpoint stays on
/// disk and the error propagates.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const Dataset& data,
                  const TrainOptions& options = {});

std::string loss_csv_header();
std::string loss_csv_row(const LossRecord& r);
void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path);

/// Per-clip metrics of the network output against HR, plus the bicubic
/// baseline. Raises InvalidDataset when a clip has no HR frames.
MetricReport evaluate(const MsvsrNet& net, const Dataset& data, ChannelMode mode, int crop_border = 0);
MetricReport evaluate(const Checkpoint& ckpt, const Dataset& data, ChannelMode mode, int crop_border = 0);

/// Mean main-loss value over whole clips (no cropping, no auxiliary term).
double dataset_loss(const MsvsrNet& net, const Dataset& data, double eps);

struct AblationVariant {
  std::string id;  // "A", "B", "C" or "full"
  bool use_ram = false;
  bool use_lfm = false;
  bool use_aux = false;
};
/// The four flag patterns in order A, B, C, full.
std::vector<AblationVariant> ablation_variants();
/// Subset by comma-separated ids; unknown ids raise ConfigError.
std::vector<AblationVariant> select_variants(const std::string& ids);

struct AblationRow {
  AblationVariant variant;
  std::size_t params = 0;
  double initial_loss = 0;
  double final_loss = 0;
  double psnr_db = 0;
  double ssim = 0;
};

struct AblationTable {
  ChannelMode channel_mode = ChannelMode::RGB;
  std::vector<AblationRow> rows;
  double bicubic_psnr_db = 0;

  std::string to_markdown() const;
  std::string to_tsv() const;
};

AblationTable ablate(const ModelConfig& base, const TrainConfig& train_cfg, const Dataset& data,
                     const std::vector<AblationVariant>& variants = ablation_variants(),
                     ChannelMode mode = ChannelMode::RGB);

MSVSR_NAMESPACE_END
