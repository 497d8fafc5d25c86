// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/data.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "msvsr/png_io.hpp"
#include "msvsr/random.hpp"

MSVSR_NAMESPACE_BEGIN

namespace fs = std::filesystem;

void FrameSequence::validate() const {
  MSVSR_CHECK(!frames.empty(), EmptyDataset, "sequence '" + clip_id + "' has no frames");
  const Image& first = frames.front();
  for (const Image& f : frames) {
    MSVSR_CHECK(f.same_shape(first), ShapeMismatch,
                fmt::format("clip '{}': frame {}x{}x{} vs {}x{}x{}", clip_id, f.channels, f.height,
                            f.width, first.channels, first.height, first.width));
    for (float v : f.pixels)
      MSVSR_CHECK(v >= 0.0f && v <= 1.0f, InvariantViolation,
                  "clip '" + clip_id + "' has a pixel outside [0, 1]");
  }
}

void DegradationSpec::validate() const {
  MSVSR_CHECK(scale == 4, InvalidArgument, fmt::format("scale must be 4, got {}", scale));
  MSVSR_CHECK(blur_sigma > 0, InvalidArgument, "blur_sigma must be positive");
  int min_size = static_cast<int>(std::ceil(4.0 * blur_sigma + 1.0));
  if (min_size % 2 == 0) ++min_size;
  MSVSR_CHECK(kernel_size % 2 == 1 && kernel_size >= min_size, InvalidArgument,
              fmt::format("kernel_size {} must be odd and >= {}", kernel_size, min_size));
}

bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ie = i;
      std::size_t je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string na = a.substr(i, ie - i);
      std::string nb = b.substr(j, je - j);
      na.erase(0, std::min(na.find_first_not_of('0'), na.size()));
      nb.erase(0, std::min(nb.find_first_not_of('0'), nb.size()));
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      // Equal value: fewer leading zeros first.
      if (ie - i != je - j) return ie - i < je - j;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

std::vector<fs::path> list_frames(const fs::path& directory, const std::string& pattern) {
  MSVSR_CHECK(fs::is_directory(directory), NotFound, "no such directory: " + directory.string());
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) == 0) names.push_back(name);
  }
  MSVSR_CHECK(!names.empty(), EmptyDataset,
              "no files matching '" + pattern + "' in " + directory.string());
  std::sort(names.begin(), names.end(), natural_less);
  std::vector<fs::path> paths;
  for (const std::string& name : names) paths.push_back(directory / name);
  return paths;
}

FrameSequence load_sequence(const fs::path& directory, const std::string& pattern) {
  const std::vector<fs::path> paths = list_frames(directory, pattern);
  FrameSequence seq;
  seq.clip_id = directory.filename().string();
  if (seq.clip_id.empty()) seq.clip_id = directory.parent_path().filename().string();
  for (const fs::path& path : paths) seq.frames.push_back(read_png(path));
  seq.validate();
  return seq;
}

void save_sequence(const FrameSequence& seq, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  MSVSR_CHECK(!ec, IOError, "cannot create " + directory.string() + ": " + ec.message());
  for (std::size_t i = 0; i < seq.frames.size(); ++i)
    write_png(directory / fmt::format("{:08d}.png", i), seq.frames[i]);
}

std::vector<double> gaussian_kernel(double sigma, int kernel_size) {
  std::vector<double> k(kernel_size);
  const int r = kernel_size / 2;
  double sum = 0;
  for (int i = 0; i < kernel_size; ++i) {
    const double d = i - r;
    k[i] = std::exp(-d * d / (2 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Image blur_subsample(const Image& hr, const DegradationSpec& spec) {
  spec.validate();
  MSVSR_CHECK(hr.height % spec.scale == 0 && hr.width % spec.scale == 0, ShapeMismatch,
              fmt::format("{}x{} frame is not divisible by {}", hr.height, hr.width, spec.scale));
  const std::vector<double> k = gaussian_kernel(spec.blur_sigma, spec.kernel_size);
  const int r = spec.kernel_size / 2;
  const int s = spec.scale;
  const int oh = hr.height / s;
  const int ow = hr.width / s;
  Image out(hr.channels, oh, ow);
  std::vector<double> rows(static_cast<std::size_t>(hr.height) * ow);
  for (int c = 0; c < hr.channels; ++c) {
    // Horizontal pass at the retained columns only.
    for (int y = 0; y < hr.height; ++y)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0;
        for (int t = 0; t < spec.kernel_size; ++t)
          acc += k[t] * hr.at(c, y, reflect_index(ox * s + t - r, hr.width));
        rows[static_cast<std::size_t>(y) * ow + ox] = acc;
      }
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0;
        for (int t = 0; t < spec.kernel_size; ++t)
          acc += k[t] * rows[static_cast<std::size_t>(reflect_index(oy * s + t - r, hr.height)) * ow + ox];
        out.at(c, oy, ox) = static_cast<float>(acc);
      }
  }
  return out;
}

FrameSequence bd_degrade(const FrameSequence& hr, const DegradationSpec& spec) {
  spec.validate();
  MSVSR_CHECK(!hr.frames.empty(), EmptyDataset, "bd_degrade: empty sequence");
  FrameSequence lr;
  lr.clip_id = hr.clip_id;
  lr.frame_rate = hr.frame_rate;
  for (const Image& f : hr.frames) {
    Image d = blur_subsample(f, spec);
    for (float& v : d.pixels) v = std::clamp(v, 0.0f, 1.0f);
    lr.frames.push_back(std::move(d));
  }
  return lr;
}

TrainingSample sample_patch(const FrameSequence& hr, const FrameSequence& lr, int patch,
                            int n_frames, std::uint64_t seed) {
  MSVSR_CHECK(!lr.frames.empty() && hr.size() == lr.size(), ShapeMismatch,
              "sample_patch: hr/lr frame counts differ");
  MSVSR_CHECK(n_frames >= 1 && static_cast<int>(lr.size()) >= n_frames, ShapeMismatch,
              fmt::format("sample_patch: {} frames requested from a clip of {}", n_frames, lr.size()));
  MSVSR_CHECK(patch >= 1 && lr.height() >= patch && lr.width() >= patch, ShapeMismatch,
              fmt::format("patch {} larger than {}x{} frame", patch, lr.height(), lr.width()));
  MSVSR_CHECK(hr.height() == 4 * lr.height() && hr.width() == 4 * lr.width(), ShapeMismatch,
              "sample_patch: hr must be exactly 4x lr");

  Rng rng(seed);
  TrainingSample s;
  s.clip_id = lr.clip_id;
  s.start_frame = static_cast<int>(rng.below(lr.size() - n_frames + 1));
  s.row = static_cast<int>(rng.below(lr.height() - patch + 1));
  s.col = static_cast<int>(rng.below(lr.width() - patch + 1));

  auto crop = [](const Image& src, int row, int col, int size) {
    Image out(src.channels, size, size);
    for (int c = 0; c < src.channels; ++c)
      for (int y = 0; y < size; ++y)
        std::copy_n(&src.pixels[(static_cast<std::size_t>(c) * src.height + row + y) * src.width + col], size,
                    &out.at(c, y, 0));
    return out;
  };
  s.lr.clip_id = s.hr.clip_id = lr.clip_id;
  for (int t = s.start_frame; t < s.start_frame + n_frames; ++t) {
    s.lr.frames.push_back(crop(lr.frames[t], s.row, s.col, patch));
    s.hr.frames.push_back(crop(hr.frames[t], 4 * s.row, 4 * s.col, 4 * patch));
  }
  return s;
}

namespace {

Image synthetic_texture(int size, Rng& rng) {
  constexpr double two_pi = 2 * std::numbers::pi;
  Image img(3, size, size);
  std::vector<double> acc(static_cast<std::size_t>(3) * size * size, 0.5);
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < 6; ++k) {
      const double amp = rng.uniform(0.04, 0.12);
      int fx = static_cast<int>(rng.below(13)) - 6;
      int fy = static_cast<int>(rng.below(13)) - 6;
      if (fx == 0 && fy == 0) fx = 1;
      const double phase = rng.uniform(0, two_pi);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          acc[(static_cast<std::size_t>(c) * size + y) * size + x] +=
              amp * std::cos(two_pi * (fx * x + fy * y) / size + phase);
    }
  }
  // Wrapped rectangles give sharp edges while keeping the texture periodic.
  for (int k = 0; k < 3; ++k) {
    const int y0 = static_cast<int>(rng.below(size));
    const int x0 = static_cast<int>(rng.below(size));
    const int rh = size / 8 + static_cast<int>(rng.below(size / 4 + 1));
    const int rw = size / 8 + static_cast<int>(rng.below(size / 4 + 1));
    double delta[3];
    for (double& d : delta) d = rng.uniform(-0.25, 0.25);
    for (int y = 0; y < rh; ++y)
      for (int x = 0; x < rw; ++x)
        for (int c = 0; c < 3; ++c)
          acc[(static_cast<std::size_t>(c) * size + (y0 + y) % size) * size + (x0 + x) % size] += delta[c];
  }
  for (std::size_t i = 0; i < acc.size(); ++i)
    img.pixels[i] = static_cast<float>(quantize_u8(static_cast<float>(acc[i]))) / 255.0f;
  return img;
}

Image shifted(const Image& base, int dx, int dy) {
  Image out(base.channels, base.height, base.width);
  const auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
  for (int c = 0; c < base.channels; ++c)
    for (int y = 0; y < base.height; ++y)
      for (int x = 0; x < base.width; ++x)
        out.at(c, y, x) = base.at(c, wrap(y - dy, base.height), wrap(x - dx, base.width));
  return out;
}

}  // namespace

Dataset make_synthetic_dataset(int n_clips, int n_frames, int hr_size, int motion,
                               std::uint64_t seed, const DegradationSpec& spec) {
  MSVSR_CHECK(hr_size > 0 && hr_size % 4 == 0, ShapeMismatch,
              fmt::format("hr_size {} is not divisible by 4", hr_size));
  MSVSR_CHECK(n_clips >= 1 && n_frames >= 1, InvalidArgument, "need at least one clip and frame");
  Rng rng(seed);
  Dataset ds;
  ds.seed = seed;
  ds.motion = motion;
  static constexpr int kDirs[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int i = 0; i < n_clips; ++i) {
    ClipPair clip;
    clip.clip_id = fmt::format("clip{:03d}", i);
    const auto* dir = kDirs[rng.below(4)];
    clip.motion_dx = dir[0] * motion;
    clip.motion_dy = dir[1] * motion;
    const Image base = synthetic_texture(hr_size, rng);
    clip.hr.clip_id = clip.clip_id;
    for (int t = 0; t < n_frames; ++t)
      clip.hr.frames.push_back(shifted(base, t * clip.motion_dx, t * clip.motion_dy));
    clip.lr = bd_degrade(clip.hr, spec);
    ds.clips.push_back(std::move(clip));
  }
  return ds;
}

Dataset load_dataset(const fs::path& root, const DegradationSpec& spec) {
  MSVSR_CHECK(fs::is_directory(root), NotFound, "no such dataset root: " + root.string());
  std::vector<std::string> clip_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) clip_dirs.push_back(entry.path().filename().string());
  MSVSR_CHECK(!clip_dirs.empty(), EmptyDataset, "no clip directories under " + root.string());
  std::sort(clip_dirs.begin(), clip_dirs.end(), natural_less);

  Dataset ds;
  const fs::path manifest = root / "manifest.json";
  std::map<std::string, std::pair<int, int>> motions;
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_object()) {
      ds.seed = j.value("seed", std::uint64_t{0});
      ds.motion = j.value("motion", 0);
      if (j.contains("clips"))
        for (const auto& c : j["clips"])
          motions[c.value("clip_id", "")] = {c.value("motion_dx", 0), c.value("motion_dy", 0)};
    }
  }
  for (const std::string& id : clip_dirs) {
    ClipPair clip;
    clip.clip_id = id;
    clip.hr = load_sequence(root / id, "*.png");
    clip.hr.clip_id = id;
    clip.lr = bd_degrade(clip.hr, spec);
    if (auto it = motions.find(id); it != motions.end()) {
      clip.motion_dx = it->second.first;
      clip.motion_dy = it->second.second;
    }
    ds.clips.push_back(std::move(clip));
  }
  return ds;
}

void write_dataset(const Dataset& dataset, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  MSVSR_CHECK(!ec && fs::is_directory(root), IOError, "cannot create " + root.string());
  nlohmann::json clips = nlohmann::json::array();
  for (const ClipPair& c : dataset.clips) {
    save_sequence(c.hr, root / c.clip_id);
    clips.push_back({{"clip_id", c.clip_id},
                     {"n_frames", c.hr.size()},
                     {"hr_height", c.hr.height()},
                     {"hr_width", c.hr.width()},
                     {"motion_dx", c.motion_dx},
                     {"motion_dy", c.motion_dy}});
  }
  nlohmann::json j{{"seed", dataset.seed}, {"motion", dataset.motion}, {"clips", clips}};
  std::ofstream out(root / "manifest.json");
  MSVSR_CHECK(out.good(), IOError, "cannot write manifest in " + root.string());
  out << j.dump(2) << "\n";
}

namespace {

double cubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1) return ((a + 2) * x - (a + 3)) * x * x + 1;
  if (x < 2) return ((a * x - 5 * a) * x + 8 * a) * x - 4 * a;
  return 0;
}

// Taps and weights for one output coordinate.
struct CubicTaps {
  int index[4];
  double weight[4];
};

std::vector<CubicTaps> cubic_taps(int in, int factor) {
  std::vector<CubicTaps> taps(static_cast<std::size_t>(in) * factor);
  for (int o = 0; o < in * factor; ++o) {
    const double src = (o + 0.5) / factor - 0.5;
    const int base = static_cast<int>(std::floor(src));
    const double t = src - base;
    for (int k = 0; k < 4; ++k) {
      taps[o].index[k] = std::clamp(base - 1 + k, 0, in - 1);
      taps[o].weight[k] = cubic_weight(t - (k - 1));
    }
  }
  return taps;
}

}  // namespace

Image resize_bicubic(const Image& image, int factor) {
  MSVSR_CHECK(factor >= 1, InvalidArgument, "resize factor must be >= 1");
  const auto ty = cubic_taps(image.height, factor);
  const auto tx = cubic_taps(image.width, factor);
  const int oh = image.height * factor;
  const int ow = image.width * factor;
  Image out(image.channels, oh, ow);
  std::vector<double> rows(static_cast<std::size_t>(oh) * image.width);
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < image.width; ++x) {
        double v = 0;
        for (int k = 0; k < 4; ++k) v += ty[y].weight[k] * image.at(c, ty[y].index[k], x);
        rows[static_cast<std::size_t>(y) * image.width + x] = v;
      }
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double v = 0;
        for (int k = 0; k < 4; ++k) v += tx[x].weight[k] * rows[static_cast<std::size_t>(y) * image.width + tx[x].index[k]];
        out.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
  }
  return out;
}

FrameSequence resize_bicubic(const FrameSequence& seq, int factor) {
  FrameSequence out;
  out.clip_id = seq.clip_id;
  out.frame_rate = seq.frame_rate;
  for (const Image& f : seq.frames) out.frames.push_back(resize_bicubic(f, factor));
  return out;
}

MSVSR_NAMESPACE_END
