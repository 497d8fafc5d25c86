// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msvsr/common.hpp"

MSVSR_NAMESPACE_BEGIN

/// Planar CHW image with values in [0, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w), pixels(static_cast<std::size_t>(c) * h * w, fill) {}

  float& at(int c, int y, int x) { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

/// Ordered clip; frame order is temporal order.
struct FrameSequence {
  std::vector<Image> frames;
  std::string clip_id;
  std::optional<double> frame_rate;

  std::size_t size() const { return frames.size(); }
  int channels() const { return frames.empty() ? 0 : frames.front().channels; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int width() const { return frames.empty() ? 0 : frames.front().width; }

  /// Raises EmptyDataset / ShapeMismatch / InvariantViolation.
  void validate() const;
};

struct DegradationSpec {
  int scale = 4;
  double blur_sigma = 1.6;
  int kernel_size = 13;

  void validate() const;
};

struct TrainingSample {
  FrameSequence lr;
  FrameSequence hr;
  std::string clip_id;
  int row = 0;          // crop origin, LR pixels
  int col = 0;
  int start_frame = 0;  // temporal window start
};

struct ClipPair {
  std::string clip_id;
  FrameSequence hr;
  FrameSequence lr;
  int motion_dx = 0;  // HR pixels per frame (synthetic clips only)
  int motion_dy = 0;
};

struct Dataset {
  std::vector<ClipPair> clips;
  std::uint64_t seed = 0;
  int motion = 0;
};

/// Files matching `pattern` (fnmatch glob) in natural filename order; raises
/// NotFound / EmptyDataset.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& directory,
                                               const std::string& pattern = "*.png");
/// Frames matching `pattern` (fnmatch glob) in natural filename order.
FrameSequence load_sequence(const std::filesystem::path& directory,
                            const std::string& pattern = "*.png");
/// Writes `<directory>/<index:08d>.png` (8-bit RGB).
void save_sequence(const FrameSequence& seq, const std::filesystem::path& directory);

/// Normalized 1-D Gaussian taps centred on kernel_size / 2.
std::vector<double> gaussian_kernel(double sigma, int kernel_size);

/// Blur + subsample without the final clip to [0, 1]; linear in `hr`.
Image blur_subsample(const Image& hr, const DegradationSpec& spec);

/// Blur Downsampling: separable Gaussian blur with reflect padding (mirror,
/// edge not repeated), then every `scale`-th pixel starting at index 0.
FrameSequence bd_degrade(const FrameSequence& hr, const DegradationSpec& spec = {});

/// Random crop + temporal window. Draws from Rng(seed) in this order:
///   start_frame = below(T - n_frames + 1)
///   row         = below(H_lr - patch + 1)
///   col         = below(W_lr - patch + 1)
TrainingSample sample_patch(const FrameSequence& hr, const FrameSequence& lr, int patch,
                            int n_frames, std::uint64_t seed);

/// Periodic textures translating by `motion` HR pixels per frame along an
/// axis picked per clip; HR values are quantized to 8-bit levels so the set
/// round-trips through PNG unchanged.
Dataset make_synthetic_dataset(int n_clips, int n_frames, int hr_size, int motion,
                               std::uint64_t seed, const DegradationSpec& spec = {});

/// `<root>/<clip_id>/*.png` HR clips; LR synthesized with bd_degrade.
Dataset load_dataset(const std::filesystem::path& root, const DegradationSpec& spec = {});
/// Writes HR frames in the dataset layout plus `manifest.json`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& root);

/// Integer-factor bicubic resize (a = -0.5, half-pixel centres, edge
/// clamped), output clipped to [0, 1].
Image resize_bicubic(const Image& image, int factor);
FrameSequence resize_bicubic(const FrameSequence& seq, int factor);

/// Natural ordering: digit runs compare numerically.
bool natural_less(const std::string& a, const std::string& b);

MSVSR_NAMESPACE_END
