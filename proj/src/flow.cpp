// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/flow.hpp"

#include <fmt/format.h>

#include "bilinear.hpp"
#include "msvsr/ops.hpp"

MSVSR_NAMESPACE_BEGIN

Var warp(const Var& src, const FlowField& flow) {
  const Shape& s = src.shape();
  const Shape& f = flow.shape();
  MSVSR_CHECK(f.n == s.n && f.c == 2 && f.h == s.h && f.w == s.w, ShapeMismatch,
              fmt::format("warp: source {} vs flow {}", s.str(), f.str()));
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    const Real* fx = flow.value().plane(n, 0);
    const Real* fy = flow.value().plane(n, 1);
    for (int c = 0; c < s.c; ++c) {
      const Real* plane = src.value().plane(n, c);
      Real* dst = out.plane(n, c);
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          const int i = y * s.w + x;
          dst[i] = bilinear::sample(plane, s.h, s.w, y + fy[i], x + fx[i]);
        }
    }
  }
  return Var::from_op(std::move(out), {src, flow}, [src, flow](const Tensor& g, const Tensor&) {
    const Shape& s = src.shape();
    const bool need_src = src.requires_grad();
    const bool need_flow = flow.requires_grad();
    Tensor gsrc(need_src ? s : Shape{});
    Tensor gflow(need_flow ? flow.shape() : Shape{});
    for (int n = 0; n < s.n; ++n) {
      const Real* fx = flow.value().plane(n, 0);
      const Real* fy = flow.value().plane(n, 1);
      for (int c = 0; c < s.c; ++c) {
        const Real* plane = src.value().plane(n, c);
        Real* gplane = need_src ? gsrc.plane(n, c) : nullptr;
        const Real* gout = g.plane(n, c);
        for (int y = 0; y < s.h; ++y)
          for (int x = 0; x < s.w; ++x) {
            const int i = y * s.w + x;
            Real dy = 0;
            Real dx = 0;
            bilinear::backward(plane, gplane, s.h, s.w, y + fy[i], x + fx[i], gout[i], dy, dx);
            if (need_flow) {
              gflow.plane(n, 0)[i] += gout[i] * dx;
              gflow.plane(n, 1)[i] += gout[i] * dy;
            }
          }
      }
    }
    if (need_src) src.accumulate_grad(gsrc);
    if (need_flow) flow.accumulate_grad(gflow);
  });
}

void FlowPyramidConfig::validate() const {
  MSVSR_CHECK(n_levels >= 1, InvalidArgument, "flow pyramid needs at least one level");
  MSVSR_CHECK(base_channels >= 1, InvalidArgument, "flow base_channels must be positive");
  MSVSR_CHECK(kernel_size >= 1 && kernel_size % 2 == 1, InvalidArgument,
              "flow kernel_size must be odd");
}

FlowNet::FlowNet(ParamStore& store, const std::string& name, const FlowPyramidConfig& cfg)
    : cfg_(cfg) {
  cfg.validate();
  const int b = cfg.base_channels;
  const int widths[6] = {8, 2 * b, 4 * b, 2 * b, b, 2};
  for (int l = 0; l < cfg.n_levels; ++l) {
    Level level;
    for (int i = 0; i < 5; ++i) {
      const Init init = i == 4 ? Init::Zero : Init::Default;
      level.convs.emplace_back(store, fmt::format("{}.level{}.conv{}", name, l, i), widths[i],
                               widths[i + 1], cfg.kernel_size, ParamGroup::Flow, init);
    }
    levels_.push_back(std::move(level));
  }
}

std::vector<FlowField> FlowNet::pyramid(const Var& ref, const Var& sup) const {
  const Shape& s = ref.shape();
  MSVSR_CHECK(s == sup.shape() && s.c == 3, ShapeMismatch,
              fmt::format("estimate_flow: ref {} vs sup {}", s.str(), sup.shape().str()));
  const int m = 1 << (cfg_.n_levels - 1);
  const int ph = (m - s.h % m) % m;
  const int pw = (m - s.w % m) % m;

  std::vector<Var> refs{pad_bottom_right(ref, ph, pw)};
  std::vector<Var> sups{pad_bottom_right(sup, ph, pw)};
  for (int l = 1; l < cfg_.n_levels; ++l) {
    refs.push_back(avg_pool2(refs.back()));
    sups.push_back(avg_pool2(sups.back()));
  }

  std::vector<FlowField> flows;
  const Shape& coarse = refs.back().shape();
  FlowField flow = zeros(Shape{coarse.n, 2, coarse.h, coarse.w});
  for (int l = 0; l < cfg_.n_levels; ++l) {
    const Var& r = refs[cfg_.n_levels - 1 - l];
    const Var& sp = sups[cfg_.n_levels - 1 - l];
    if (l > 0) flow = scale(upsample_bilinear(flow, 2), Real(2));
    Var h = concat_channels({r, warp(sp, flow), flow});
    const auto& convs = levels_[l].convs;
    for (std::size_t i = 0; i < convs.size(); ++i) {
      h = convs[i](h);
      if (i + 1 < convs.size()) h = relu(h);
    }
    flow = flow + h;
    flows.push_back(flow);
  }
  return flows;
}

FlowField FlowNet::operator()(const Var& ref, const Var& sup) const {
  const std::vector<FlowField> flows = pyramid(ref, sup);
  return crop_top_left(flows.back(), ref.shape().h, ref.shape().w);
}

MSVSR_NAMESPACE_END
