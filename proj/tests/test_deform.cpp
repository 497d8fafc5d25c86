// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "msvsr/deform.hpp"
#include "msvsr/ops.hpp"
#include "test_util.hpp"

using namespace msvsr;
using namespace msvsr::testing;

namespace {

struct Rig {
  ParamStore store;
  DeformKernel kernel;
  Rig(int in, int out, int k, int dg, std::uint64_t seed) : kernel(store, "dcn", in, out, k, dg) {
    store.initialize(seed);
    Rng rng(seed + 1);
    for (Real& v : kernel.bias.mutable_value().values()) v = static_cast<Real>(rng.uniform(-0.5, 0.5));
  }
};

AlignmentParams random_params(int n, int k, int dg, int h, int w, Rng& rng, double reach = 2.5) {
  return {Var(rand_tensor({n, 2 * k * k * dg, h, w}, rng, -reach, reach)),
          Var(rand_tensor({n, k * k * dg, h, w}, rng, 0, 1))};
}

AlignmentParams constant_params(int n, int k, int dg, int h, int w, Real dx, Real dy, Real m) {
  Tensor off(Shape{n, 2 * k * k * dg, h, w});
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < k * k * dg; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          off.at(b, 2 * c, y, x) = dx;
          off.at(b, 2 * c + 1, y, x) = dy;
        }
  return {Var(off), Var(Tensor(Shape{n, k * k * dg, h, w}, m))};
}

void zero(const Conv2d& conv) {
  Var w = conv.weight, b = conv.bias;
  w.mutable_value().fill(0);
  b.mutable_value().fill(0);
}

}  // namespace

TEST_CASE("deform_conv matches the reference on random fractional offsets") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const int dg = trial % 2 ? 2 : 1;
    Rig rig(4, 3, 3, dg, 100 + trial);
    const Tensor x = rand_tensor({1, 4, 5, 5}, rng);
    const AlignmentParams p = random_params(1, 3, dg, 5, 5, rng);
    const Tensor got = deform_conv(Var(x), p, rig.kernel).value();
    const Tensor ref = deform_conv_oracle(x, p, rig.kernel);
    CHECK(max_abs_diff(got, ref) <= 1e-5);
  }
}

TEST_CASE("deform_conv with zero offsets and unit masks is a standard convolution") {
  Rng rng(2);
  Rig rig(3, 4, 3, 1, 7);
  const Tensor x = rand_tensor({2, 3, 6, 5}, rng);
  const Tensor got = deform_conv(Var(x), constant_params(2, 3, 1, 6, 5, 0, 0, 1), rig.kernel).value();
  const Tensor ref = conv_oracle(x, rig.kernel.weight.value(), &rig.kernel.bias.value(), 1);
  CHECK(max_abs_diff(got, ref) <= 1e-6);
}

TEST_CASE("deform_conv with integer offsets shifts the input") {
  Rng rng(3);
  Rig rig(2, 2, 3, 1, 8);
  Tensor& w = rig.kernel.weight.mutable_value();
  w.fill(0);
  w.at(0, 0, 1, 1) = 1;
  w.at(1, 1, 1, 1) = 1;
  rig.kernel.bias.mutable_value().fill(0);
  const Tensor x = rand_tensor({1, 2, 5, 6}, rng);
  const Tensor out = deform_conv(Var(x), constant_params(1, 3, 1, 5, 6, 1, 0, 1), rig.kernel).value();
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 5; ++y)
      for (int xx = 0; xx < 5; ++xx) CHECK(out.at(0, c, y, xx) == x.at(0, c, y, xx + 1));
}

TEST_CASE("deform_conv of zero input is the bias") {
  Rng rng(4);
  Rig rig(2, 3, 3, 1, 9);
  const Tensor out = deform_conv(Var(Tensor(Shape{1, 2, 4, 4})), random_params(1, 3, 1, 4, 4, rng), rig.kernel).value();
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) CHECK(out.at(0, c, y, x) == rig.kernel.bias.value().at(0, c, 0, 0));
}

TEST_CASE("deform_conv of an impulse is the weighted bilinear footprint") {
  Rig rig(1, 1, 3, 1, 10);
  rig.kernel.bias.mutable_value().fill(0);
  Tensor x(Shape{1, 1, 3, 3});
  x.at(0, 0, 1, 1) = 1;
  const Real dx = 0.25f, dy = 0.5f, m = 0.5f;
  const Tensor out = deform_conv(Var(x), constant_params(1, 3, 1, 3, 3, dx, dy, m), rig.kernel).value();
  const auto tent = [](double d) { return std::max(0.0, 1 - std::abs(d)); };
  for (int py = 0; py < 3; ++py)
    for (int px = 0; px < 3; ++px) {
      double expect = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double qy = py + i - 1 + dy, qx = px + j - 1 + dx;
          expect += rig.kernel.weight.value().at(0, 0, i, j) * m * tent(qy - 1) * tent(qx - 1);
        }
      CHECK(out.at(0, 0, py, px) == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("oracle reproduces the same degenerate cases") {
  Rng rng(5);
  Rig rig(2, 2, 3, 1, 11);
  const Tensor x = rand_tensor({1, 2, 4, 4}, rng);
  const Tensor conv = conv_oracle(x, rig.kernel.weight.value(), &rig.kernel.bias.value(), 1);
  CHECK(max_abs_diff(deform_conv_oracle(x, constant_params(1, 3, 1, 4, 4, 0, 0, 1), rig.kernel), conv) <= 1e-6);
  const Tensor zero_out = deform_conv_oracle(Tensor(x.shape()), random_params(1, 3, 1, 4, 4, rng), rig.kernel);
  for (int c = 0; c < 2; ++c) CHECK(zero_out.at(0, c, 2, 1) == rig.kernel.bias.value().at(0, c, 0, 0));
}

TEST_CASE("masks outside [0, 1] are rejected") {
  Rng rng(6);
  Rig rig(1, 1, 3, 1, 12);
  AlignmentParams p = constant_params(1, 3, 1, 3, 3, 0, 0, 1);
  p.masks.mutable_value().at(0, 4, 1, 1) = 1.5f;
  try {
    deform_conv(Var(rand_tensor({1, 1, 3, 3}, rng)), p, rig.kernel);
    FAIL("expected InvariantViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvariantViolation);
  }
}

TEST_CASE("flow-guided alignment: shapes and zero-residual behaviour") {
  Rng rng(7);
  ParamStore store;
  FlowGuidedAlign fga(store, "align", 4, 2);
  store.initialize(3);
  const Var nb = rand_var({2, 4, 5, 6}, rng);
  const Var cur = rand_var({2, 4, 5, 6}, rng);
  Tensor zero_flow(Shape{2, 2, 5, 6});
  const AlignResult r = fga(nb, cur, Var(zero_flow));
  CHECK(r.params.offsets.shape() == Shape{2, 2 * 9 * 2, 5, 6});
  CHECK(r.params.masks.shape() == Shape{2, 9 * 2, 5, 6});
  CHECK(r.aligned.shape() == nb.shape());
  // freshly initialized: residual head is zero, so offsets are zero and masks 0.5
  for (Real v : r.params.offsets.value().values()) CHECK(v == 0);
  for (Real v : r.params.masks.value().values()) CHECK(v == 0.5f);
  Tensor half_w = fga.kernel().weight.value();
  for (Real& v : half_w.values()) v *= 0.5f;
  CHECK(max_abs_diff(r.aligned.value(), conv_oracle(nb.value(), half_w, &fga.kernel().bias.value(), 1)) <= 1e-5);
}

TEST_CASE("flow-guided alignment samples at flow-displaced taps") {
  Rng rng(8);
  ParamStore store;
  FlowGuidedAlign fga(store, "align", 3, 1);
  store.initialize(4);
  const Var cur = rand_var({1, 3, 6, 6}, rng);
  // neighbor is current shifted right by 2 px; flow (2, 0) points back
  Tensor nb(cur.shape());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 6; ++y)
      for (int x = 2; x < 6; ++x) nb.at(0, c, y, x) = cur.value().at(0, c, y, x - 2);
  const Var flow = constant_params(1, 1, 1, 6, 6, 2, 0, 1).offsets;
  const AlignResult r = fga(Var(nb), cur, flow);
  const Tensor ref = deform_conv_oracle(nb, constant_params(1, 3, 1, 6, 6, 2, 0, 0.5f), fga.kernel());
  CHECK(max_abs_diff(r.aligned.value(), ref) <= 1e-5);
}

TEST_CASE("re-align degenerates to the pre-alignment when its residual is zero") {
  Rng rng(9);
  ParamStore store;
  ReAlign ram(store, "ram", 4, 2);
  store.initialize(5);
  const Var cur = rand_var({1, 4, 5, 5}, rng);
  const Var nb = rand_var({1, 4, 5, 5}, rng);
  const AlignmentParams p2 = random_params(1, 3, 2, 5, 5, rng);
  // zero-initialized residual head
  const AlignResult fresh = ram(cur, nb, p2);
  CHECK(bit_equal(fresh.aligned.value(), ram.pre_align(nb, p2).value()));

  // randomized, then explicitly zeroed
  store.initialize(6);
  for (const Parameter& p : store.params()) {
    Var v = p.var;
    for (Real& x : v.mutable_value().values()) x = static_cast<Real>(rng.uniform(-0.1, 0.1));
  }
  zero(ram.residual_head());
  CHECK(bit_equal(ram(cur, nb, p2).aligned.value(), ram.pre_align(nb, p2).value()));

  // zero stage-2 offsets, unit masks: a standard convolution of the neighbour
  const Tensor conv = conv_oracle(nb.value(), ram.kernel().weight.value(), &ram.kernel().bias.value(), 1);
  CHECK(max_abs_diff(ram(cur, nb, constant_params(1, 3, 2, 5, 5, 0, 0, 1)).aligned.value(), conv) <= 1e-5);
}

TEST_CASE("re-align matches the reference at the summed parameters") {
  Rng rng(10);
  ParamStore store;
  ReAlign ram(store, "ram", 4, 2);
  store.initialize(7);
  for (const Parameter& p : store.params()) {
    Var v = p.var;
    for (Real& x : v.mutable_value().values()) x = static_cast<Real>(rng.uniform(-0.2, 0.2));
  }
  const Var cur = rand_var({1, 4, 5, 5}, rng);
  const Var nb = rand_var({1, 4, 5, 5}, rng);
  const AlignmentParams p2 = random_params(1, 3, 2, 5, 5, rng);
  const AlignResult r = ram(cur, nb, p2);
  for (Real m : r.params.masks.value().values()) {
    CHECK(m >= 0);
    CHECK(m <= 1);
  }
  const Tensor ref = deform_conv_oracle(nb.value(), r.params, ram.kernel());
  CHECK(max_abs_diff(r.aligned.value(), ref) <= 1e-5);
  // the summed offsets really differ from stage 2
  CHECK(max_abs_diff(r.params.offsets.value(), p2.offsets.value()) > 1e-3);
}

TEST_CASE("default deformable groups") {
  CHECK(default_deformable_groups(16) == 1);
  CHECK(default_deformable_groups(32) == 8);
  CHECK(default_deformable_groups(64) == 8);
}
