// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "msvsr/data.hpp"
#include "msvsr/png_io.hpp"
#include "test_util.hpp"

using namespace msvsr;
using namespace msvsr::testing;

namespace {

int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

// Full 2D Gaussian convolution with reflected borders, then every 4th pixel.
Image blur_oracle(const Image& hr, double sigma, int ks) {
  const int r = ks / 2;
  std::vector<double> k2(static_cast<std::size_t>(ks) * ks);
  double sum = 0;
  for (int i = 0; i < ks; ++i)
    for (int j = 0; j < ks; ++j) {
      const double d2 = (i - r) * (i - r) + (j - r) * (j - r);
      k2[i * ks + j] = std::exp(-d2 / (2 * sigma * sigma));
      sum += k2[i * ks + j];
    }
  Image out(hr.channels, hr.height / 4, hr.width / 4);
  for (int c = 0; c < hr.channels; ++c)
    for (int oy = 0; oy < out.height; ++oy)
      for (int ox = 0; ox < out.width; ++ox) {
        double acc = 0;
        for (int i = 0; i < ks; ++i)
          for (int j = 0; j < ks; ++j)
            acc += k2[i * ks + j] / sum *
                   hr.at(c, reflect(oy * 4 + i - r, hr.height), reflect(ox * 4 + j - r, hr.width));
        out.at(c, oy, ox) = static_cast<float>(acc);
      }
  return out;
}

void write_frames(const std::filesystem::path& dir, const std::vector<Image>& frames) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) write_png(dir / fmt::format("{:08d}.png", i), frames[i]);
}

}  // namespace

TEST_CASE("load_sequence reads frames in order") {
  TempDir tmp("seq");
  Rng rng(3);
  std::vector<Image> frames;
  for (int i = 0; i < 5; ++i) frames.push_back(rand_image(3, 64, 64, rng));
  write_frames(tmp.path(), frames);
  const FrameSequence seq = load_sequence(tmp.path());
  REQUIRE(seq.size() == 5);
  CHECK(seq.channels() == 3);
  CHECK(seq.height() == 64);
  CHECK(seq.width() == 64);
  // 8-bit round trip
  CHECK(std::abs(seq.frames[2].at(1, 10, 20) - frames[2].at(1, 10, 20)) <= 0.5f / 255 + 1e-6f);
}

TEST_CASE("load_sequence: single frame, mixed sizes, empty dir") {
  TempDir tmp("seq1");
  Rng rng(1);
  write_frames(tmp / "one", {rand_image(3, 180, 320, rng)});
  const FrameSequence one = load_sequence(tmp / "one");
  CHECK(one.size() == 1);
  CHECK(one.height() == 180);
  CHECK(one.width() == 320);

  write_frames(tmp / "mixed", {rand_image(3, 64, 64, rng), rand_image(3, 32, 32, rng)});
  try {
    load_sequence(tmp / "mixed");
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }

  std::filesystem::create_directories(tmp / "empty");
  try {
    load_sequence(tmp / "empty");
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyDataset);
  }
}

TEST_CASE("list_frames uses natural order") {
  TempDir tmp("natural");
  Rng rng(2);
  for (const char* name : {"f10.png", "f2.png", "f1.png"}) write_png(tmp / name, rand_image(3, 4, 4, rng));
  const auto files = list_frames(tmp.path());
  REQUIRE(files.size() == 3);
  CHECK(files[0].filename() == "f1.png");
  CHECK(files[1].filename() == "f2.png");
  CHECK(files[2].filename() == "f10.png");
}

TEST_CASE("bd_degrade of a constant clip is constant") {
  FrameSequence hr;
  hr.frames.push_back(Image(3, 32, 32, 0.5f));
  const FrameSequence lr = bd_degrade(hr);
  REQUIRE(lr.height() == 8);
  for (float v : lr.frames[0].pixels) CHECK(v == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("blur_subsample matches a direct 2D convolution") {
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    const Image hr = rand_image(3, 8, 8, rng);
    const Image lr = blur_subsample(hr, DegradationSpec{4, 1.6, 13});
    const Image ref = blur_oracle(hr, 1.6, 13);
    REQUIRE(lr.height == 2);
    REQUIRE(lr.width == 2);
    for (std::size_t i = 0; i < lr.pixels.size(); ++i) CHECK(lr.pixels[i] == doctest::Approx(ref.pixels[i]).epsilon(1e-5));
  }
  const Image big = rand_image(3, 24, 16, rng);
  const Image lr = blur_subsample(big, DegradationSpec{4, 2.0, 9});
  const Image ref = blur_oracle(big, 2.0, 9);
  for (std::size_t i = 0; i < lr.pixels.size(); ++i) CHECK(lr.pixels[i] == doctest::Approx(ref.pixels[i]).epsilon(1e-5));
}

TEST_CASE("bd_degrade rejects frames not divisible by the scale") {
  FrameSequence hr;
  hr.frames.push_back(Image(3, 7, 8));
  CHECK_THROWS_AS(bd_degrade(hr), Error);
  try {
    bd_degrade(hr);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
}

TEST_CASE("sample_patch: forced origin, determinism, replay") {
  Rng rng(5);
  FrameSequence hr, lr;
  for (int i = 0; i < 3; ++i) hr.frames.push_back(rand_image(3, 256, 256, rng));
  lr = bd_degrade(hr);

  const TrainingSample whole = sample_patch(hr, lr, 64, 3, 9);
  CHECK(whole.row == 0);
  CHECK(whole.col == 0);
  CHECK(whole.start_frame == 0);

  FrameSequence hr100, lr100;
  for (int i = 0; i < 4; ++i) hr100.frames.push_back(rand_image(3, 400, 400, rng));
  lr100 = bd_degrade(hr100);
  const std::uint64_t seed = 1234;
  const TrainingSample a = sample_patch(hr100, lr100, 64, 2, seed);
  const TrainingSample b = sample_patch(hr100, lr100, 64, 2, seed);
  CHECK(a.row == b.row);
  CHECK(a.col == b.col);
  CHECK(a.start_frame == b.start_frame);
  CHECK(a.lr.frames[1].pixels == b.lr.frames[1].pixels);
  CHECK(a.hr.frames[0].pixels == b.hr.frames[0].pixels);

  // replay: start frame, then row, then column, each next() % range
  std::mt19937_64 replay(seed);
  const int start = static_cast<int>(replay() % 3);
  const int row = static_cast<int>(replay() % 37);
  const int col = static_cast<int>(replay() % 37);
  CHECK(a.start_frame == start);
  CHECK(a.row == row);
  CHECK(a.col == col);
  CHECK(a.lr.frames[0].at(2, 5, 7) == lr100.frames[start].at(2, row + 5, col + 7));
  CHECK(a.hr.frames[1].at(0, 13, 3) == hr100.frames[start + 1].at(0, 4 * row + 13, 4 * col + 3));
}

TEST_CASE("synthetic dataset: zero motion, determinism, shift pattern") {
  const Dataset still = make_synthetic_dataset(1, 4, 32, 0, 3);
  for (const Image& f : still.clips[0].hr.frames) CHECK(f.pixels == still.clips[0].hr.frames[0].pixels);

  const Dataset a = make_synthetic_dataset(2, 6, 64, 4, 7);
  const Dataset b = make_synthetic_dataset(2, 6, 64, 4, 7);
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < 6; ++t) {
      CHECK(a.clips[c].hr.frames[t].pixels == b.clips[c].hr.frames[t].pixels);
      CHECK(a.clips[c].lr.frames[t].pixels == b.clips[c].lr.frames[t].pixels);
    }

  // LR frame t is frame 0 circularly shifted by t pixels along the clip's
  // motion direction. The blur reflects at the borders (radius 6 HR px), so
  // only LR rows/cols 2..14 are compared.
  for (const ClipPair& clip : a.clips) {
    const int dx = clip.motion_dx / 4;
    const int dy = clip.motion_dy / 4;
    CHECK(std::abs(dx) + std::abs(dy) == 1);
    const Image& f0 = clip.lr.frames[0];
    for (int t = 1; t < 6; ++t) {
      const Image& ft = clip.lr.frames[t];
      int compared = 0;
      for (int c = 0; c < 3; ++c)
        for (int y = 2; y < 15; ++y)
          for (int x = 2; x < 15; ++x) {
            const int sy = y - t * dy;
            const int sx = x - t * dx;
            if (sy < 2 || sy >= 15 || sx < 2 || sx >= 15) continue;
            CHECK(ft.at(c, y, x) == doctest::Approx(f0.at(c, sy, sx)).epsilon(1e-5));
            ++compared;
          }
      CHECK(compared > 0);
    }
    // HR frames are exact circular shifts everywhere
    const Image& h0 = clip.hr.frames[0];
    const Image& h3 = clip.hr.frames[3];
    for (int y = 0; y < 64; y += 5)
      for (int x = 0; x < 64; x += 3)
        CHECK(h3.at(1, y, x) == h0.at(1, ((y - 3 * clip.motion_dy) % 64 + 64) % 64,
                                       ((x - 3 * clip.motion_dx) % 64 + 64) % 64));
  }
}

TEST_CASE("dataset write / load round trip") {
  TempDir tmp("ds");
  const Dataset ds = make_synthetic_dataset(2, 3, 32, 4, 1);
  write_dataset(ds, tmp.path());
  const Dataset back = load_dataset(tmp.path());
  REQUIRE(back.clips.size() == 2);
  CHECK(back.clips[1].clip_id == ds.clips[1].clip_id);
  CHECK(back.clips[1].motion_dx == ds.clips[1].motion_dx);
  CHECK(back.clips[0].hr.frames[2].pixels == ds.clips[0].hr.frames[2].pixels);
  CHECK(back.clips[0].lr.frames[2].pixels == ds.clips[0].lr.frames[2].pixels);
  CHECK_THROWS_AS(load_dataset(tmp / "missing"), Error);
}

TEST_CASE("resize_bicubic preserves constants and shape") {
  Image c(3, 5, 7, 0.25f);
  const Image up = resize_bicubic(c, 4);
  CHECK(up.height == 20);
  CHECK(up.width == 28);
  for (float v : up.pixels) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
}
