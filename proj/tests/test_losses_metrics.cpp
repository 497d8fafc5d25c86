// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "metric_oracles.hpp"
#include "msvsr/losses.hpp"
#include "msvsr/ops.hpp"
#include "msvsr/metrics.hpp"
#include "test_util.hpp"

using namespace msvsr;
using namespace msvsr::testing;

TEST_CASE("charbonnier closed forms") {
  const Var a(Tensor(Shape{1, 1, 2, 2}, 0.3f));
  CHECK(charbonnier(a, a, 1e-12).value().item() == doctest::Approx(1e-6).epsilon(1e-6));
  const Var p(Tensor::scalar(3)), g(Tensor::scalar(0));
  CHECK(charbonnier(p, g, 16).value().item() == doctest::Approx(5));
  CHECK_THROWS_AS(charbonnier(a, Var(Tensor(Shape{1, 1, 2, 3})), 1e-6), Error);
}

TEST_CASE("charbonnier matches an elementwise loop") {
  Rng rng(1);
  for (double eps : {1e-12, 1e-6, 1e-3}) {
    const Tensor p = rand_tensor({2, 3, 4, 4}, rng), g = rand_tensor({2, 3, 4, 4}, rng);
    double acc = 0;
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double d = static_cast<double>(p.data()[i]) - g.data()[i];
      acc += std::sqrt(d * d + eps);
    }
    CHECK(charbonnier(Var(p), Var(g), eps).value().item() == doctest::Approx(acc / p.numel()).epsilon(1e-7));
  }
}

TEST_CASE("aux loss is the mean of per-frame terms") {
  Rng rng(2);
  std::vector<Var> aux, gt;
  for (int i = 0; i < 3; ++i) {
    aux.push_back(Var(rand_tensor({1, 3, 4, 4}, rng)));
    gt.push_back(Var(rand_tensor({1, 3, 4, 4}, rng)));
  }
  double expect = 0;
  for (int i = 0; i < 3; ++i) expect += charbonnier(aux[i], gt[i], 1e-6).value().item();
  CHECK(aux_loss(aux, gt, 1e-6).value().item() == doctest::Approx(expect / 3).epsilon(1e-6));
  CHECK(aux_loss({aux[1]}, {gt[1]}, 1e-6).value().item() == charbonnier(aux[1], gt[1], 1e-6).value().item());
  CHECK(aux_loss({gt[0]}, {gt[0]}, 1e-12).value().item() == doctest::Approx(1e-6).epsilon(1e-6));
}

TEST_CASE("total loss composition") {
  Rng rng(3);
  NetOutput out;
  std::vector<Var> gt;
  for (int i = 0; i < 2; ++i) {
    out.sr.push_back(Var(rand_tensor({1, 3, 4, 4}, rng), true));
    out.aux.push_back(Var(rand_tensor({1, 3, 4, 4}, rng), true));
    gt.push_back(Var(rand_tensor({1, 3, 4, 4}, rng)));
  }
  LossConfig cfg;
  cfg.aux_weight = 0;
  const LossTerms zero_w = total_loss(out, gt, cfg);
  const double main = charbonnier(concat_batch(out.sr), concat_batch(gt), cfg.charbonnier_eps).value().item();
  CHECK(zero_w.total.value().item() == main);

  cfg.aux_enabled = false;
  cfg.aux_weight = 1;
  CHECK(total_loss(out, gt, cfg).total.value().item() == main);

  cfg.aux_enabled = true;
  const LossTerms both = total_loss(out, gt, cfg);
  const double aux = aux_loss(out.aux, gt, cfg.charbonnier_eps).value().item();
  CHECK(both.main == doctest::Approx(main));
  CHECK(both.aux == doctest::Approx(aux));
  CHECK(both.total.value().item() == doctest::Approx(main + aux).epsilon(1e-6));

  NetOutput no_aux = out;
  no_aux.aux.clear();
  CHECK_THROWS_AS(total_loss(no_aux, gt, cfg), Error);
}

TEST_CASE("rgb_to_y coefficients") {
  auto y_of = [](float r, float g, float b) {
    Image px(3, 1, 1);
    px.at(0, 0, 0) = r;
    px.at(1, 0, 0) = g;
    px.at(2, 0, 0) = b;
    return rgb_to_y(px).at(0, 0, 0);
  };
  CHECK(y_of(1, 1, 1) == static_cast<float>(235.0 / 255.0));
  CHECK(y_of(0, 0, 0) == static_cast<float>(16.0 / 255.0));
  CHECK(y_of(0, 1, 0) == static_cast<float>((128.553 + 16.0) / 255.0));
  CHECK(y_of(1, 0, 0) == static_cast<float>((65.481 + 16.0) / 255.0));
  CHECK(y_of(0, 0, 1) == static_cast<float>((24.966 + 16.0) / 255.0));
}

TEST_CASE("psnr closed forms and oracle") {
  Rng rng(4);
  const Image a = rand_image(3, 16, 16, rng);
  CHECK(std::isinf(psnr(a, a, ChannelMode::RGB)));
  CHECK(std::isinf(psnr(a, a, ChannelMode::Y)));
  const Image c0(3, 8, 8, 100.0f / 255), c1(3, 8, 8, 116.0f / 255);
  CHECK(mse_u8(c0, c1, ChannelMode::RGB) == 256.0);
  CHECK(psnr(c0, c1, ChannelMode::RGB) == doctest::Approx(10 * std::log10(65025.0 / 256)).epsilon(1e-12));
  for (int i = 0; i < 10; ++i) {
    const Image x = rand_image(3, 20, 24, rng), y = rand_image(3, 20, 24, rng);
    CHECK(std::abs(psnr(x, y, ChannelMode::RGB) - psnr_oracle(x, y, false)) < 1e-9);
    CHECK(std::abs(psnr(x, y, ChannelMode::Y) - psnr_oracle(x, y, true)) < 1e-9);
  }
}

TEST_CASE("crop border changes the MSE to the cropped oracle") {
  Rng rng(5);
  Image a = rand_image(3, 24, 24, rng), b = a;
  // differences only in the 4-pixel border
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x)
        if (y < 4 || x < 4 || y >= 20 || x >= 20) b.at(c, y, x) = 1 - a.at(c, y, x);
  b.at(1, 10, 10) = std::min(1.0f, a.at(1, 10, 10) + 0.2f);
  CHECK(mse_u8(a, b, ChannelMode::RGB, 4) == doctest::Approx(mse_oracle(a, b, false, 4)).epsilon(1e-12));
  CHECK(mse_u8(a, b, ChannelMode::RGB, 4) < mse_u8(a, b, ChannelMode::RGB, 0));
  CHECK_THROWS_AS(mse_u8(a, b, ChannelMode::RGB, 12), Error);
}

TEST_CASE("ssim identities and oracle") {
  Rng rng(6);
  const Image a = rand_image(3, 16, 16, rng);
  CHECK(ssim(a, a, ChannelMode::RGB) == 1.0);
  CHECK(ssim(a, a, ChannelMode::Y) == 1.0);
  const Image zero(3, 12, 12, 0.0f), one(3, 12, 12, 1.0f);
  const double c1 = 6.5025, c2 = 58.5225;
  CHECK(ssim(zero, one, ChannelMode::RGB) == doctest::Approx(c1 * c2 / ((255.0 * 255 + c1) * c2)).epsilon(1e-9));
  for (int i = 0; i < 5; ++i) {
    const Image x = rand_image(3, 14, 17, rng), y = rand_image(3, 14, 17, rng);
    CHECK(std::abs(ssim(x, y, ChannelMode::RGB) - ssim_oracle(x, y, false)) < 1e-6);
    CHECK(std::abs(ssim(x, y, ChannelMode::Y) - ssim_oracle(x, y, true)) < 1e-6);
  }
  CHECK_THROWS_AS(ssim(Image(3, 10, 10), Image(3, 10, 10), ChannelMode::RGB), Error);
}

TEST_CASE("reports") {
  Rng rng(7);
  FrameSequence a, b;
  a.clip_id = b.clip_id = "c";
  for (int i = 0; i < 2; ++i) {
    a.frames.push_back(rand_image(3, 12, 12, rng));
    b.frames.push_back(a.frames.back());
  }
  MetricReport r;
  r.channel_mode = ChannelMode::Y;
  r.clips.push_back(measure_clip(a, b, ChannelMode::Y));
  r.mean = mean_metrics(r.clips);
  CHECK(std::isinf(r.mean.psnr_db));
  CHECK(r.mean.ssim == 1.0);
  const std::string tsv = r.to_tsv();
  CHECK(tsv.rfind("clip_id\tn_frames\tpsnr_db\tssim\tchannel_mode\n", 0) == 0);
  CHECK(tsv.find("c\t2\tinf\t1.000000\tY") != std::string::npos);
  CHECK(r.to_json()["mean"]["psnr_db"] == "inf");
  CHECK(parse_channel_mode("RGB") == ChannelMode::RGB);
  CHECK_THROWS_AS(parse_channel_mode("lab"), Error);

  // infinite clips are left out of the PSNR mean
  ClipMetrics finite{"f", 1, 30.0, 0.9};
  ClipMetrics inf{"i", 1, INFINITY, 1.0};
  CHECK(mean_metrics({finite, inf}).psnr_db == 30.0);
}
