// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "msvsr/data.hpp"
#include "msvsr/flow.hpp"
#include "msvsr/losses.hpp"
#include "msvsr/model.hpp"
#include "msvsr/ops.hpp"
#include "test_util.hpp"

using namespace msvsr;
using namespace msvsr::testing;

namespace {

Var constant_flow(int n, int h, int w, Real dx, Real dy) {
  Tensor f(Shape{n, 2, h, w});
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        f.at(b, 0, y, x) = dx;
        f.at(b, 1, y, x) = dy;
      }
  return Var(f);
}

}  // namespace

TEST_CASE("warp with zero flow is the identity") {
  Rng rng(1);
  const Var src = rand_var({2, 3, 5, 7}, rng);
  CHECK(bit_equal(warp(src, constant_flow(2, 5, 7, 0, 0)).value(), src.value()));
}

TEST_CASE("warp by one pixel undoes a one-pixel shift") {
  Rng rng(2);
  const Tensor orig = rand_tensor({1, 2, 6, 8}, rng);
  Tensor src(orig.shape());
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 6; ++y)
      for (int x = 1; x < 8; ++x) src.at(0, c, y, x) = orig.at(0, c, y, x - 1);
  const Tensor out = warp(Var(src), constant_flow(1, 6, 8, 1, 0)).value();
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 7; ++x) CHECK(out.at(0, c, y, x) == orig.at(0, c, y, x));
  // last column samples outside the frame
  for (int y = 0; y < 6; ++y) CHECK(out.at(0, 0, y, 7) == 0);
}

TEST_CASE("warp entirely out of bounds gives zeros") {
  Rng rng(3);
  const Var src = rand_var({1, 3, 4, 4}, rng);
  for (auto [dx, dy] : {std::pair{10.5, 0.0}, {0.0, -7.25}, {-4.0, 4.0}}) {
    const Tensor out = warp(src, constant_flow(1, 4, 4, static_cast<Real>(dx), static_cast<Real>(dy))).value();
    for (Real v : out.values()) CHECK(v == 0);
  }
}

TEST_CASE("warp fractional sample") {
  Tensor src(Shape{1, 1, 2, 2}, std::vector<Real>{1, 2, 3, 4});
  const Tensor out = warp(Var(src), constant_flow(1, 2, 2, 0.25f, 0.5f)).value();
  // (0,0) -> (y 0.5, x 0.25)
  CHECK(out.at(0, 0, 0, 0) == doctest::Approx(0.5 * 0.75 * 1 + 0.5 * 0.25 * 2 + 0.5 * 0.75 * 3 + 0.5 * 0.25 * 4));
  // (1,1) -> (1.5, 1.25): only the (1,1) corner is inside
  CHECK(out.at(0, 0, 1, 1) == doctest::Approx(0.5 * 0.75 * 4));
}

TEST_CASE("FlowNet with a zeroed last layer predicts zero flow") {
  ParamStore store;
  FlowNet net(store, "flow", FlowPyramidConfig{3, 4, 5});
  store.initialize(1);
  Rng rng(4);
  const Var ref = rand_var({2, 3, 13, 10}, rng, 0, 1);
  const Var sup = rand_var({2, 3, 13, 10}, rng, 0, 1);
  const Var flow = net(ref, sup);
  CHECK(flow.shape() == Shape{2, 2, 13, 10});
  for (Real v : flow.value().values()) CHECK(v == 0);
  for (const Parameter& p : store.params()) CHECK(p.group == ParamGroup::Flow);
}

TEST_CASE("FlowNet recovers known synthetic motion") {
  // LR motion is exactly 1 px per frame; fit the flow network photometrically
  const Dataset ds = make_synthetic_dataset(1, 5, 128, 4, 21);
  const ClipPair& clip = ds.clips[0];
  std::vector<Var> ref, sup;
  for (int t = 0; t + 1 < 5; ++t) {
    ref.emplace_back(image_to_tensor(clip.lr.frames[t]));
    sup.emplace_back(image_to_tensor(clip.lr.frames[t + 1]));
  }
  const Var r = concat_batch(ref);
  const Var s = concat_batch(sup);
  ParamStore store;
  FlowNet net(store, "flow", FlowPyramidConfig{3, 8, 5});
  store.initialize(2);
  std::vector<Var> leaves;
  for (const Parameter& p : store.params()) leaves.push_back(p.var);
  TestAdam adam(leaves, 2e-3);
  for (int it = 0; it < 300; ++it) {
    adam.zero_grad();
    charbonnier(warp(s, net(r, s)), r, 1e-6).backward();
    adam.step();
  }
  const Tensor flow = net(r, s).value();
  const double gx = clip.motion_dx / 4;
  const double gy = clip.motion_dy / 4;
  double mag = 0, err = 0;
  int count = 0;
  const int h = flow.shape().h, w = flow.shape().w;
  for (int n = 0; n < flow.shape().n; ++n)
    for (int y = 4; y < h - 4; ++y)
      for (int x = 4; x < w - 4; ++x) {
        const double fx = flow.at(n, 0, y, x), fy = flow.at(n, 1, y, x);
        mag += std::hypot(fx, fy);
        err += std::hypot(fx - gx, fy - gy);
        ++count;
      }
  mag /= count;
  err /= count;
  MESSAGE("mean flow magnitude " << mag << ", mean endpoint error " << err);
  CHECK(std::abs(mag - 1.0) < 0.3);
  CHECK(err < 0.3);
}
