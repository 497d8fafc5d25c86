// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "msvsr/losses.hpp"
#include "msvsr/model.hpp"
#include "msvsr/ops.hpp"
#include "msvsr/trainer.hpp"
#include "test_util.hpp"

using namespace msvsr;
using namespace msvsr::testing;

namespace {

std::vector<Var> rand_clip(int n, int h, int w, Rng& rng, int batch = 1) {
  std::vector<Var> clip;
  for (int i = 0; i < n; ++i) clip.push_back(Var(rand_tensor({batch, 3, h, w}, rng, 0, 1)));
  return clip;
}

void fill_params(MsvsrNet& net, Rng& rng, double lo, double hi) {
  for (Parameter& p : net.params().params())
    for (Real& v : p.var.mutable_value().values()) v = static_cast<Real>(rng.uniform(lo, hi));
}

void zero_params(MsvsrNet& net, const std::string& prefix = "") {
  for (Parameter& p : net.params().params())
    if (p.name.rfind(prefix, 0) == 0) p.var.mutable_value().fill(0);
}

ClipFlows zero_flows(int n, Shape s) {
  ClipFlows f;
  for (int i = 0; i < n; ++i) {
    f.to_next.push_back(zeros(Shape{s.n, 2, s.h, s.w}));
    f.to_prev.push_back(zeros(Shape{s.n, 2, s.h, s.w}));
  }
  return f;
}

double lrelu(double v) { return v >= 0 ? v : 0.1 * v; }

}  // namespace

TEST_CASE("forward shapes") {
  Rng rng(1);
  MsvsrNet net(named_config("tiny"));
  net.initialize(1);
  const NetOutput out = net.forward(rand_clip(5, 16, 16, rng));
  REQUIRE(out.sr.size() == 5);
  REQUIRE(out.aux.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(out.sr[i].shape() == Shape{1, 3, 64, 64});
    CHECK(out.aux[i].shape() == Shape{1, 3, 64, 64});
  }
  ModelConfig no_aux = named_config("tiny");
  no_aux.use_aux_loss = false;
  MsvsrNet plain(no_aux);
  plain.initialize(1);
  CHECK(plain.forward(rand_clip(2, 8, 8, rng)).aux.empty());
  CHECK_THROWS_AS(plain.aux_head(Var(Tensor(Shape{1, 16, 4, 4})), Var(Tensor(Shape{1, 3, 4, 4}))), Error);
}

TEST_CASE("feature extraction: shapes and per-frame purity") {
  Rng rng(2);
  ModelConfig cfg = named_config("tiny");
  cfg.channels = 32;
  MsvsrNet net(cfg);
  net.initialize(2);
  const std::vector<Var> clip = rand_clip(5, 64, 64, rng);
  const std::vector<Var> g = net.extract_features(clip);
  REQUIRE(g.size() == 5);
  for (const Var& f : g) CHECK(f.shape() == Shape{1, 32, 64, 64});
  const std::vector<Var> perm = {clip[3], clip[0], clip[4], clip[1], clip[2]};
  const std::vector<Var> gp = net.extract_features(perm);
  CHECK(bit_equal(gp[0].value(), g[3].value()));
  CHECK(bit_equal(gp[2].value(), g[4].value()));
  CHECK(bit_equal(gp[4].value(), g[2].value()));
}

TEST_CASE("feature extraction hand trace with a single block") {
  MsvsrNet net(named_config("tiny"));
  net.initialize(3);
  zero_params(net, "extract");
  // input conv bias b, block output bias c: f = lrelu(b) + c per channel
  ParamStore& store = net.params();
  Var b0 = store.find("extract.input.bias")->var;
  Var c0 = store.find("extract.blocks.0.conv2.bias")->var;
  for (int c = 0; c < 16; ++c) {
    b0.mutable_value().at(0, c, 0, 0) = static_cast<Real>(c % 2 ? 0.5 : -0.5);
    c0.mutable_value().at(0, c, 0, 0) = static_cast<Real>(0.01 * c);
  }
  Rng rng(3);
  const Var g = net.extract_features(rand_clip(1, 4, 4, rng))[0];
  for (int c = 0; c < 16; ++c)
    CHECK(g.value().at(0, c, 2, 1) == doctest::Approx(lrelu(c % 2 ? 0.5 : -0.5) + 0.01 * c).epsilon(1e-6));
}

TEST_CASE("local fusion: bypass, shape, static clip") {
  Rng rng(4);
  ModelConfig cfg = named_config("tiny");
  MsvsrNet net(cfg);
  net.initialize(4);
  const std::vector<Var> g = {rand_var({1, 16, 6, 6}, rng), rand_var({1, 16, 6, 6}, rng), rand_var({1, 16, 6, 6}, rng)};
  const ClipFlows flows = zero_flows(3, g[0].shape());
  const std::vector<Var> fused = net.local_fusion(g, flows);
  REQUIRE(fused.size() == 3);
  for (const Var& f : fused) CHECK(f.shape() == Shape{1, 16, 6, 6});

  // static clip, zero flow, zero-initialized residual: every position sees the
  // same three inputs, including the duplicated boundary neighbours
  const std::vector<Var> still = {g[0], g[0], g[0], g[0]};
  const std::vector<Var> fs = net.local_fusion(still, zero_flows(4, g[0].shape()));
  for (int t = 1; t < 4; ++t) CHECK(bit_equal(fs[t].value(), fs[0].value()));
  // single-frame call agrees with the batched clip path (GEMM blocking differs)
  const Var z = zeros(Shape{1, 2, 6, 6});
  CHECK(max_abs_diff(net.local_fusion(g[0], g[0], g[0], z, z).value(), fs[0].value()) < 1e-6);

  cfg.use_lfm = false;
  MsvsrNet bypass(cfg);
  bypass.initialize(4);
  const std::vector<Var> id = bypass.local_fusion(g, flows);
  for (int t = 0; t < 3; ++t) CHECK(bit_equal(id[t].value(), g[t].value()));
  CHECK_THROWS_AS(bypass.local_fusion(g[0], g[1], g[2], z, z), Error);
}

TEST_CASE("propagation: single frame and shapes") {
  Rng rng(5);
  MsvsrNet net(named_config("tiny"));
  net.initialize(5);
  const Var f = rand_var({1, 16, 5, 5}, rng);
  const Propagation one = net.propagate({f}, zero_flows(1, f.shape()));
  REQUIRE(one.features.size() == 1);
  CHECK(one.features[0].shape() == f.shape());
  CHECK_FALSE(one.from_next[0].has_value());
  CHECK_FALSE(one.from_prev[0].has_value());
  const std::vector<Var> s3 = net.stage3_fuse(one, zero_flows(1, f.shape()));
  CHECK(s3[0].shape() == f.shape());

  const std::vector<Var> xs = {f, rand_var({1, 16, 5, 5}, rng), rand_var({1, 16, 5, 5}, rng)};
  const Propagation p = net.propagate(xs, zero_flows(3, f.shape()));
  REQUIRE(p.features.size() == 3);
  CHECK(p.from_next[0].has_value());
  CHECK_FALSE(p.from_next[2].has_value());
  CHECK(p.from_prev[2].has_value());
  CHECK_FALSE(p.from_prev[0].has_value());
  for (const Var& x : p.features) CHECK(x.shape() == f.shape());
}

TEST_CASE("reconstruction: shapes, linearity, residual identity") {
  Rng rng(6);
  ModelConfig cfg = named_config("tiny");
  cfg.channels = 32;
  MsvsrNet net(cfg);
  net.initialize(6);
  const Var sr = net.reconstruct_upsample(rand_var({1, 32, 16, 16}, rng), rand_var({1, 3, 16, 16}, rng, 0, 1));
  CHECK(sr.shape() == Shape{1, 3, 64, 64});

  for (Parameter& p : net.params().params())
    if (p.name.rfind("recon", 0) == 0 && p.name.find(".bias") != std::string::npos) p.var.mutable_value().fill(0);
  const Tensor zero_frame =
      net.reconstruct_upsample(Var(Tensor(Shape{1, 32, 16, 16})), Var(Tensor(Shape{1, 3, 16, 16}))).value();
  for (Real v : zero_frame.values()) CHECK(v == 0);
}

TEST_CASE("zero weights give bilinear upsampling") {
  Rng rng(7);
  MsvsrNet net(named_config("tiny"));
  zero_params(net);
  const std::vector<Var> clip = rand_clip(3, 8, 8, rng);
  const NetOutput out = net.forward(clip);
  for (int i = 0; i < 3; ++i) CHECK(bit_equal(out.sr[i].value(), upsample_bilinear(clip[i], 4).value()));
}

TEST_CASE("forward on a FrameSequence clamps and reports aux frames") {
  Rng rng(8);
  MsvsrNet net(named_config("tiny"));
  net.initialize(8);
  FrameSequence lr;
  for (int i = 0; i < 3; ++i) lr.frames.push_back(rand_image(3, 6, 5, rng));
  const ForwardOutput out = forward(net, lr);
  REQUIRE(out.sr_frames.size() == 3);
  CHECK(out.sr_frames.height() == 24);
  CHECK(out.sr_frames.width() == 20);
  REQUIRE(out.aux_frames.has_value());
  for (const Image& f : out.sr_frames.frames)
    for (float v : f.pixels) {
      CHECK(v >= 0);
      CHECK(v <= 1);
    }
}

TEST_CASE("every parameter receives gradient") {
  // zero-initialized layers would block gradient, so randomize everything first
  Rng rng(9);
  MsvsrNet net(named_config("tiny"));
  fill_params(net, rng, -0.1, 0.1);
  const std::vector<Var> clip = rand_clip(3, 8, 8, rng);
  std::vector<Var> gt;
  for (int i = 0; i < 3; ++i) gt.push_back(Var(rand_tensor({1, 3, 32, 32}, rng, 0, 1)));
  const NetOutput out = net.forward(clip);
  total_loss(out, gt, LossConfig{}).total.backward();
  std::vector<std::string> dead;
  for (const Parameter& p : net.params().params()) {
    const Tensor g = p.var.grad();
    bool any = false;
    for (Real v : g.values()) any |= v != 0;
    if (!any) dead.push_back(p.name);
  }
  for (const std::string& name : dead) MESSAGE("no gradient: " << name);
  CHECK(dead.empty());
}

TEST_CASE("parameter counts") {
  CHECK(model_stats(named_config("tiny")).param_count < 300000);
  const double base = model_stats(named_config("pp-msvsr")).param_count;
  const double large = model_stats(named_config("pp-msvsr-l")).param_count;
  CHECK(std::abs(base - 1.45e6) / 1.45e6 <= 0.25);
  CHECK(std::abs(large - 7.4e6) / 7.4e6 <= 0.25);

  // monotone in the flags
  std::size_t prev = 0;
  for (const AblationVariant& v : ablation_variants()) {
    ModelConfig c = named_config("tiny");
    c.use_ram = v.use_ram;
    c.use_lfm = v.use_lfm;
    c.use_aux_loss = v.use_aux;
    const std::size_t n = model_stats(c).param_count;
    CHECK(n > prev);
    prev = n;
  }
  ModelConfig off = named_config("pp-msvsr");
  off.use_ram = off.use_lfm = off.use_aux_loss = false;
  CHECK(model_stats(off).param_count < base);

  const ModelStats st = model_stats(named_config("tiny"));
  std::size_t sum = 0;
  for (const auto& [module, n] : st.per_module) sum += n;
  CHECK(sum == st.param_count);
  CHECK(st.per_module.count("flow") == 1);
  CHECK(st.per_module.count("ram") == 1);
}

TEST_CASE("model config validation and serialization") {
  CHECK_THROWS_AS(named_config("huge"), Error);
  ModelConfig c = named_config("pp-msvsr");
  c.n_propagation_branches = 3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = named_config("pp-msvsr");
  c.deformable_groups = 5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = named_config("pp-msvsr-l");
  c.use_ram = false;
  const nlohmann::json j = c;
  const ModelConfig back = j.get<ModelConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK_FALSE(back.use_ram);
  CHECK(back.flow.base_channels == 16);
}
