// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "msvsr/data.hpp"

MSVSR_NAMESPACE_BEGIN

enum class ChannelMode { RGB, Y };

const char* to_string(ChannelMode mode);
/// Accepts "rgb" / "y" in any case; anything else raises ConfigError.
ChannelMode parse_channel_mode(const std::string& text);

/// BT.601 luma on [0, 1] input: (65.481 R + 128.553 G + 24.966 B + 16) / 255.
Image rgb_to_y(const Image& rgb);

/// PSNR in dB on 8-bit quantized inputs, peak 255. Identical images give
/// +infinity. `crop_border` pixels are dropped on every side first.
double psnr(const Image& a, const Image& b, ChannelMode mode, int crop_border = 0);

/// Single-scale SSIM on the 8-bit scale: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, valid windows only, averaged over channels.
double ssim(const Image& a, const Image& b, ChannelMode mode, int crop_border = 0);

/// Mean-squared error on the quantized 8-bit scale (the quantity psnr uses).
double mse_u8(const Image& a, const Image& b, ChannelMode mode, int crop_border = 0);

struct ClipMetrics {
  std::string clip_id;
  int n_frames = 0;
  double psnr_db = 0;  // +inf when every frame matched exactly
  double ssim = 0;
};

struct MetricReport {
  ChannelMode channel_mode = ChannelMode::RGB;
  std::vector<ClipMetrics> clips;
  ClipMetrics mean;
  /// Bicubic-upsampling reference on the same clips (empty for direct
  /// directory comparisons).
  std::vector<ClipMetrics> baseline;
  ClipMetrics baseline_mean;

  /// Columns: clip_id, n_frames, psnr_db, ssim, channel_mode. Mean rows use
  /// clip_id "mean"; baseline rows are prefixed "bicubic/".
  std::string to_tsv() const;
  nlohmann::json to_json() const;
};

/// Per-frame metrics averaged per clip. Frames with infinite PSNR are left out
/// of the PSNR mean (with a warning on stderr); a clip whose frames all match
/// reports +inf.
ClipMetrics measure_clip(const FrameSequence& output, const FrameSequence& reference,
                         ChannelMode mode, int crop_border = 0);
/// Mean over clips, same infinite-value rule.
ClipMetrics mean_metrics(const std::vector<ClipMetrics>& clips);

std::string format_psnr(double db);

MSVSR_NAMESPACE_END
