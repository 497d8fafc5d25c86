// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "msvsr/png_io.hpp"

MSVSR_NAMESPACE_BEGIN

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Planes on the 0..255 scale in double precision, after quantization and the
// optional luma conversion and border crop.
struct Planes {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;
  double at(int c, int y, int x) const { return values[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

Planes prepare(const Image& img, ChannelMode mode, int crop) {
  MSVSR_CHECK(crop >= 0 && 2 * crop < img.height && 2 * crop < img.width, ShapeMismatch,
              fmt::format("crop_border {} too large for {}x{}", crop, img.height, img.width));
  Planes p;
  p.height = img.height - 2 * crop;
  p.width = img.width - 2 * crop;
  if (mode == ChannelMode::Y) {
    MSVSR_CHECK(img.channels == 3, ShapeMismatch, "Y-channel metrics need RGB input");
    p.channels = 1;
  } else {
    p.channels = img.channels;
  }
  p.values.resize(static_cast<std::size_t>(p.channels) * p.height * p.width);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      if (mode == ChannelMode::Y) {
        const double r = quantize_u8(img.at(0, y + crop, x + crop)) / 255.0;
        const double g = quantize_u8(img.at(1, y + crop, x + crop)) / 255.0;
        const double b = quantize_u8(img.at(2, y + crop, x + crop)) / 255.0;
        p.values[static_cast<std::size_t>(y) * p.width + x] = 65.481 * r + 128.553 * g + 24.966 * b + 16.0;
      } else {
        for (int c = 0; c < p.channels; ++c)
          p.values[(static_cast<std::size_t>(c) * p.height + y) * p.width + x] =
              quantize_u8(img.at(c, y + crop, x + crop));
      }
    }
  return p;
}

void require_pair(const Image& a, const Image& b) {
  MSVSR_CHECK(a.same_shape(b), ShapeMismatch,
              fmt::format("metric inputs differ: {}x{}x{} vs {}x{}x{}", a.channels, a.height, a.width,
                          b.channels, b.height, b.width));
}

std::vector<double> ssim_window() {
  std::vector<double> g(11);
  double sum = 0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5;
    g[i] = std::exp(-d * d / (2 * 1.5 * 1.5));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

}  // namespace

const char* to_string(ChannelMode mode) { return mode == ChannelMode::Y ? "Y" : "RGB"; }

ChannelMode parse_channel_mode(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "y") return ChannelMode::Y;
  if (t == "rgb") return ChannelMode::RGB;
  raise(ErrorKind::ConfigError, "unknown channel mode '" + text + "' (expected y or rgb)");
}

Image rgb_to_y(const Image& rgb) {
  MSVSR_CHECK(rgb.channels == 3, ShapeMismatch,
              fmt::format("rgb_to_y expects 3 channels, got {}", rgb.channels));
  Image y(1, rgb.height, rgb.width);
  for (int i = 0; i < rgb.height; ++i)
    for (int j = 0; j < rgb.width; ++j) {
      const double v = 65.481 * rgb.at(0, i, j) + 128.553 * rgb.at(1, i, j) + 24.966 * rgb.at(2, i, j) + 16.0;
      y.at(0, i, j) = static_cast<float>(v / 255.0);
    }
  return y;
}

double mse_u8(const Image& a, const Image& b, ChannelMode mode, int crop_border) {
  require_pair(a, b);
  const Planes pa = prepare(a, mode, crop_border);
  const Planes pb = prepare(b, mode, crop_border);
  double acc = 0;
  for (std::size_t i = 0; i < pa.values.size(); ++i) {
    const double d = pa.values[i] - pb.values[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pa.values.size());
}

double psnr(const Image& a, const Image& b, ChannelMode mode, int crop_border) {
  const double mse = mse_u8(a, b, mode, crop_border);
  if (mse == 0) return kInf;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Image& a, const Image& b, ChannelMode mode, int crop_border) {
  require_pair(a, b);
  const Planes pa = prepare(a, mode, crop_border);
  const Planes pb = prepare(b, mode, crop_border);
  MSVSR_CHECK(pa.height >= 11 && pa.width >= 11, ShapeMismatch,
              fmt::format("ssim needs at least 11x11 pixels, got {}x{}", pa.height, pa.width));
  const std::vector<double> g = ssim_window();
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  const int oh = pa.height - 10;
  const int ow = pa.width - 10;
  double total = 0;
  for (int c = 0; c < pa.channels; ++c) {
    double channel_sum = 0;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const double w = g[i] * g[j];
            const double va = pa.at(c, y + i, x + j);
            const double vb = pb.at(c, y + i, x + j);
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        saa -= ma * ma;
        sbb -= mb * mb;
        sab -= ma * mb;
        channel_sum += ((2 * ma * mb + c1) * (2 * sab + c2)) / ((ma * ma + mb * mb + c1) * (saa + sbb + c2));
      }
    total += channel_sum / (static_cast<double>(oh) * ow);
  }
  return total / pa.channels;
}

std::string format_psnr(double db) { return std::isinf(db) ? "inf" : fmt::format("{:.4f}", db); }

ClipMetrics measure_clip(const FrameSequence& output, const FrameSequence& reference,
                         ChannelMode mode, int crop_border) {
  MSVSR_CHECK(output.size() == reference.size() && !output.frames.empty(), ShapeMismatch,
              fmt::format("clip '{}': {} output frames vs {} reference frames", reference.clip_id,
                          output.size(), reference.size()));
  ClipMetrics m;
  m.clip_id = reference.clip_id;
  m.n_frames = static_cast<int>(output.size());
  double psnr_sum = 0;
  int finite = 0;
  double ssim_sum = 0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double p = psnr(output.frames[i], reference.frames[i], mode, crop_border);
    if (std::isfinite(p)) {
      psnr_sum += p;
      ++finite;
    }
    ssim_sum += ssim(output.frames[i], reference.frames[i], mode, crop_border);
  }
  if (finite < m.n_frames && finite > 0)
    std::cerr << "warning: clip '" << m.clip_id << "': " << (m.n_frames - finite)
              << " identical frame(s) excluded from the PSNR mean\n";
  m.psnr_db = finite == 0 ? kInf : psnr_sum / finite;
  m.ssim = ssim_sum / m.n_frames;
  return m;
}

ClipMetrics mean_metrics(const std::vector<ClipMetrics>& clips) {
  ClipMetrics m;
  m.clip_id = "mean";
  if (clips.empty()) return m;
  double psnr_sum = 0;
  int finite = 0;
  double ssim_sum = 0;
  for (const ClipMetrics& c : clips) {
    m.n_frames += c.n_frames;
    if (std::isfinite(c.psnr_db)) {
      psnr_sum += c.psnr_db;
      ++finite;
    }
    ssim_sum += c.ssim;
  }
  if (finite < static_cast<int>(clips.size()) && finite > 0)
    std::cerr << "warning: " << (clips.size() - finite) << " clip(s) with infinite PSNR excluded from the mean\n";
  m.psnr_db = finite == 0 ? kInf : psnr_sum / finite;
  m.ssim = ssim_sum / static_cast<double>(clips.size());
  return m;
}

std::string MetricReport::to_tsv() const {
  std::ostringstream out;
  out << "clip_id\tn_frames\tpsnr_db\tssim\tchannel_mode\n";
  auto row = [&](const ClipMetrics& m, const std::string& prefix) {
    out << prefix << m.clip_id << '\t' << m.n_frames << '\t' << format_psnr(m.psnr_db) << '\t'
        << fmt::format("{:.6f}", m.ssim) << '\t' << to_string(channel_mode) << '\n';
  };
  for (const ClipMetrics& m : clips) row(m, "");
  row(mean, "");
  if (!baseline.empty()) {
    for (const ClipMetrics& m : baseline) row(m, "bicubic/");
    row(baseline_mean, "bicubic/");
  }
  return out.str();
}

nlohmann::json MetricReport::to_json() const {
  auto row = [&](const ClipMetrics& m) {
    nlohmann::json j{{"clip_id", m.clip_id}, {"n_frames", m.n_frames}, {"ssim", m.ssim},
                     {"channel_mode", to_string(channel_mode)}};
    if (std::isinf(m.psnr_db))
      j["psnr_db"] = "inf";
    else
      j["psnr_db"] = m.psnr_db;
    return j;
  };
  nlohmann::json j;
  j["channel_mode"] = to_string(channel_mode);
  j["clips"] = nlohmann::json::array();
  for (const ClipMetrics& m : clips) j["clips"].push_back(row(m));
  j["mean"] = row(mean);
  if (!baseline.empty()) {
    j["bicubic"] = nlohmann::json::array();
    for (const ClipMetrics& m : baseline) j["bicubic"].push_back(row(m));
    j["bicubic_mean"] = row(baseline_mean);
  }
  return j;
}

MSVSR_NAMESPACE_END
