// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/deform.hpp"

#include <fmt/format.h>

#include "bilinear.hpp"
#include "linalg.hpp"
#include "msvsr/ops.hpp"

MSVSR_NAMESPACE_BEGIN

namespace {

using linalg::ConstMatrixMap;
using linalg::Matrix;
using linalg::MatrixMap;

struct Geometry {
  int n, c, h, w;
  int k, kk, dg, channels_per_dg;
};

Geometry check_geometry(const Shape& in, const Shape& off, const Shape& mask, const Shape& weight,
                        int groups, int deformable_groups) {
  const int k = weight.h;
  MSVSR_CHECK(weight.h == weight.w && k % 2 == 1, ShapeMismatch,
              "deform_conv: kernel must be square and odd, got " + weight.str());
  MSVSR_CHECK(groups >= 1 && in.c % groups == 0 && weight.n % groups == 0, ShapeMismatch,
              fmt::format("deform_conv: channels {} / {} not divisible by groups {}", in.c, weight.n,
                          groups));
  MSVSR_CHECK(weight.c * groups == in.c, ShapeMismatch,
              fmt::format("deform_conv: weight {} does not match {} input channels", weight.str(), in.c));
  MSVSR_CHECK(deformable_groups >= 1 && in.c % deformable_groups == 0, ShapeMismatch,
              fmt::format("deform_conv: {} channels not divisible by {} deformable groups", in.c,
                          deformable_groups));
  const int kk = k * k;
  const Shape want_off{in.n, 2 * kk * deformable_groups, in.h, in.w};
  const Shape want_mask{in.n, kk * deformable_groups, in.h, in.w};
  MSVSR_CHECK(off == want_off, ShapeMismatch,
              "deform_conv: offsets " + off.str() + ", expected " + want_off.str());
  MSVSR_CHECK(mask == want_mask, ShapeMismatch,
              "deform_conv: masks " + mask.str() + ", expected " + want_mask.str());
  return Geometry{in.n, in.c, in.h, in.w, k, kk, deformable_groups, in.c / deformable_groups};
}

void check_masks(const Tensor& masks) {
  for (Real v : masks.values())
    MSVSR_CHECK(v >= 0 && v <= 1, InvariantViolation, "deform_conv: modulation mask outside [0, 1]");
}

// Bilinear footprint of one sampling location, shared by every channel of a
// deformable group. Out-of-frame corners get weight 0 and index 0.
struct Footprint {
  int idx[4];
  Real wt[4];
  bool ok[4];
  Real ly, lx;
  bool inside;
};

void footprint(int h, int w, Real py, Real px, Footprint& f) {
  bilinear::Corners c;
  f.inside = bilinear::corners(py, px, h, w, c);
  if (!f.inside) {
    for (int j = 0; j < 4; ++j) {
      f.idx[j] = 0;
      f.wt[j] = 0;
      f.ok[j] = false;
    }
    f.ly = f.lx = 0;
    return;
  }
  const bool ok[4] = {c.in_y0 && c.in_x0, c.in_y0 && c.in_x1, c.in_y1 && c.in_x0, c.in_y1 && c.in_x1};
  const int base = c.y0 * w + c.x0;
  const int idx[4] = {base, base + 1, base + w, base + w + 1};
  const Real hy = 1 - c.ly;
  const Real hx = 1 - c.lx;
  const Real wt[4] = {hy * hx, hy * c.lx, c.ly * hx, c.ly * c.lx};
  for (int j = 0; j < 4; ++j) {
    f.idx[j] = ok[j] ? idx[j] : 0;
    f.wt[j] = ok[j] ? wt[j] : Real(0);
    f.ok[j] = ok[j];
  }
  f.ly = c.ly;
  f.lx = c.lx;
}

// Footprints for all pixels of tap k in deformable group dgi of batch item n.
void tap_footprints(const Tensor& off, const Geometry& g, int n, int dgi, int k, std::vector<Footprint>& fp) {
  const int r = g.k / 2;
  const int ki = k / g.k;
  const int kj = k % g.k;
  const Real* dx = off.plane(n, (dgi * g.kk + k) * 2);
  const Real* dy = off.plane(n, (dgi * g.kk + k) * 2 + 1);
  fp.resize(static_cast<std::size_t>(g.h) * g.w);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      const int i = y * g.w + x;
      footprint(g.h, g.w, static_cast<Real>(y + ki - r) + dy[i], static_cast<Real>(x + kj - r) + dx[i], fp[i]);
    }
}

inline Real gather(const Real* plane, const Footprint& f) {
  return f.wt[0] * plane[f.idx[0]] + f.wt[1] * plane[f.idx[1]] + f.wt[2] * plane[f.idx[2]] +
         f.wt[3] * plane[f.idx[3]];
}

// Rows (c, k), columns (n, y, x): mask * bilinear sample at the tap location.
void deform_im2col(const Tensor& in, const Tensor& off, const Tensor& mask, const Geometry& g,
                   Matrix& cols) {
  const int hw = g.h * g.w;
  cols.resize(static_cast<Eigen::Index>(g.c) * g.kk, static_cast<Eigen::Index>(g.n) * hw);
  std::vector<Footprint> fp;
  for (int n = 0; n < g.n; ++n)
    for (int dgi = 0; dgi < g.dg; ++dgi)
      for (int k = 0; k < g.kk; ++k) {
        tap_footprints(off, g, n, dgi, k, fp);
        const Real* m = mask.plane(n, dgi * g.kk + k);
        for (int c = dgi * g.channels_per_dg; c < (dgi + 1) * g.channels_per_dg; ++c) {
          const Real* plane = in.plane(n, c);
          Real* dst = cols.row(c * g.kk + k).data() + static_cast<std::size_t>(n) * hw;
          for (int i = 0; i < hw; ++i) dst[i] = m[i] * gather(plane, fp[i]);
        }
      }
}

Matrix to_channel_major(const Tensor& t) {
  const Shape& s = t.shape();
  const std::size_t hw = s.plane();
  Matrix m(s.c, static_cast<Eigen::Index>(s.n * hw));
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) std::copy_n(t.plane(n, c), hw, m.row(c).data() + n * hw);
  return m;
}

}  // namespace

DeformKernel::DeformKernel(ParamStore& store, const std::string& name, int in_channels,
                           int out_channels, int kernel_size, int n_deformable_groups, int n_groups)
    : groups(n_groups), deformable_groups(n_deformable_groups) {
  MSVSR_CHECK(kernel_size % 2 == 1, InvalidArgument, "deform kernel size must be odd");
  MSVSR_CHECK(in_channels % groups == 0 && out_channels % groups == 0, InvalidArgument,
              "deform kernel channels not divisible by groups");
  const int fan_in = in_channels / groups * kernel_size * kernel_size;
  weight = store.create(name + ".weight",
                        Shape{out_channels, in_channels / groups, kernel_size, kernel_size},
                        ParamGroup::Main, Init::Default, fan_in);
  bias = store.create(name + ".bias", Shape{1, out_channels, 1, 1}, ParamGroup::Main, Init::Zero,
                      fan_in);
}

Var deform_conv(const Var& input, const AlignmentParams& params, const DeformKernel& kernel) {
  const Var& off = params.offsets;
  const Var& mask = params.masks;
  const Geometry g = check_geometry(input.shape(), off.shape(), mask.shape(), kernel.weight.shape(),
                                    kernel.groups, kernel.deformable_groups);
  check_masks(mask.value());
  const int cout = kernel.weight.shape().n;
  const int groups = kernel.groups;
  const std::size_t hw = static_cast<std::size_t>(g.h) * g.w;
  const Eigen::Index krows = static_cast<Eigen::Index>(g.c / groups) * g.kk;
  const Eigen::Index orows = cout / groups;

  Matrix cols;
  deform_im2col(input.value(), off.value(), mask.value(), g, cols);
  Matrix out_mat(cout, cols.cols());
  ConstMatrixMap wmat(kernel.weight.value().data(), cout, krows);
  for (int gr = 0; gr < groups; ++gr)
    out_mat.middleRows(gr * orows, orows).noalias() =
        wmat.middleRows(gr * orows, orows) * cols.middleRows(gr * krows, krows);

  Tensor out(Shape{g.n, cout, g.h, g.w});
  const Real* bias = kernel.bias.value().data();
  for (int n = 0; n < g.n; ++n)
    for (int co = 0; co < cout; ++co) {
      const Real* src = out_mat.row(co).data() + n * hw;
      Real* dst = out.plane(n, co);
      for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] + bias[co];
    }

  const Var weight = kernel.weight;
  const Var bvar = kernel.bias;
  return Var::from_op(
      std::move(out), {input, off, mask, weight, bvar},
      [input, off, mask, weight, bvar, g, cout, groups, krows, orows](const Tensor& grad, const Tensor&) {
        const Matrix gmat = to_channel_major(grad);
        if (bvar.requires_grad()) {
          Tensor gb(bvar.shape());
          for (int co = 0; co < cout; ++co) gb.data()[co] = gmat.row(co).sum();
          bvar.accumulate_grad(gb);
        }
        if (weight.requires_grad()) {
          Matrix cols;
          deform_im2col(input.value(), off.value(), mask.value(), g, cols);
          Tensor gw(weight.shape());
          MatrixMap gwm(gw.data(), cout, krows);
          for (int gr = 0; gr < groups; ++gr)
            gwm.middleRows(gr * orows, orows).noalias() =
                gmat.middleRows(gr * orows, orows) * cols.middleRows(gr * krows, krows).transpose();
          weight.accumulate_grad(gw);
        }
        const bool need_in = input.requires_grad();
        const bool need_off = off.requires_grad();
        const bool need_mask = mask.requires_grad();
        if (!need_in && !need_off && !need_mask) return;

        ConstMatrixMap wmat(weight.value().data(), cout, krows);
        Matrix gcols(static_cast<Eigen::Index>(g.c) * g.kk, gmat.cols());
        for (int gr = 0; gr < groups; ++gr)
          gcols.middleRows(gr * krows, krows).noalias() =
              wmat.middleRows(gr * orows, orows).transpose() * gmat.middleRows(gr * orows, orows);

        Tensor gin(need_in ? input.shape() : Shape{});
        Tensor goff(need_off ? off.shape() : Shape{});
        Tensor gmask(need_mask ? mask.shape() : Shape{});
        const int hw = g.h * g.w;
        const Tensor& in = input.value();
        const Tensor& mv = mask.value();
        std::vector<Footprint> fp;
        for (int n = 0; n < g.n; ++n)
          for (int dgi = 0; dgi < g.dg; ++dgi)
            for (int k = 0; k < g.kk; ++k) {
              tap_footprints(off.value(), g, n, dgi, k, fp);
              const int oc = (dgi * g.kk + k) * 2;
              const int mc = dgi * g.kk + k;
              const Real* m = mv.plane(n, mc);
              Real* gdx = need_off ? goff.plane(n, oc) : nullptr;
              Real* gdy = need_off ? goff.plane(n, oc + 1) : nullptr;
              Real* gm = need_mask ? gmask.plane(n, mc) : nullptr;
              for (int c = dgi * g.channels_per_dg; c < (dgi + 1) * g.channels_per_dg; ++c) {
                const Real* plane = in.plane(n, c);
                Real* gplane = need_in ? gin.plane(n, c) : nullptr;
                const Real* gc = gcols.row(c * g.kk + k).data() + static_cast<std::size_t>(n) * hw;
                for (int i = 0; i < hw; ++i) {
                  const Footprint& f = fp[i];
                  if (gc[i] == 0 || !f.inside) continue;
                  if (gm) gm[i] += gc[i] * gather(plane, f);
                  const Real gs = gc[i] * m[i];
                  if (gplane)
                    for (int j = 0; j < 4; ++j) gplane[f.idx[j]] += f.wt[j] * gs;
                  if (gdx) {
                    Real v[4];
                    for (int j = 0; j < 4; ++j) v[j] = f.ok[j] ? plane[f.idx[j]] : Real(0);
                    const Real hy = 1 - f.ly;
                    const Real hx = 1 - f.lx;
                    gdy[i] += gs * (hx * (v[2] - v[0]) + f.lx * (v[3] - v[1]));
                    gdx[i] += gs * (hy * (v[1] - v[0]) + f.ly * (v[3] - v[2]));
                  }
                }
              }
            }
        if (need_in) input.accumulate_grad(gin);
        if (need_off) off.accumulate_grad(goff);
        if (need_mask) mask.accumulate_grad(gmask);
      });
}

int default_deformable_groups(int channels) { return channels >= 32 ? 8 : 1; }

FlowGuidedAlign::FlowGuidedAlign(ParamStore& store, const std::string& name, int channels,
                                 int deformable_groups, int kernel_size)
    : head_{Conv2d(store, name + ".offset0", 2 * channels + 2, channels, 3),
            Conv2d(store, name + ".offset1", channels, channels, 3),
            Conv2d(store, name + ".offset2", channels,
                   3 * kernel_size * kernel_size * deformable_groups, 3, ParamGroup::Main, Init::Zero)},
      kernel_(store, name + ".dcn", channels, channels, kernel_size, deformable_groups) {}

AlignResult FlowGuidedAlign::operator()(const Var& neighbor, const Var& current,
                                        const FlowField& flow) const {
  const Shape& s = neighbor.shape();
  MSVSR_CHECK(current.shape() == s, ShapeMismatch,
              "flow_guided_align: neighbor " + s.str() + " vs current " + current.shape().str());
  MSVSR_CHECK(flow.shape() == (Shape{s.n, 2, s.h, s.w}), ShapeMismatch,
              "flow_guided_align: flow " + flow.shape().str() + " vs feature " + s.str());
  const int taps = kernel_.kernel_size() * kernel_.kernel_size() * kernel_.deformable_groups;
  Var h = leaky_relu(head_[0](concat_channels({warp(neighbor, flow), current, flow})));
  h = leaky_relu(head_[1](h));
  const Var pred = head_[2](h);
  AlignmentParams params;
  params.offsets = slice_channels(pred, 0, 2 * taps) + tile_channels(flow, taps);
  params.masks = sigmoid(slice_channels(pred, 2 * taps, 3 * taps));
  Var aligned = deform_conv(neighbor, params, kernel_);
  return {aligned, params};
}

ReAlign::ReAlign(ParamStore& store, const std::string& name, int channels, int deformable_groups,
                 int kernel_size)
    : head_{Conv2d(store, name + ".residual0", 2 * channels, channels, 3),
            Conv2d(store, name + ".residual1", channels,
                   3 * kernel_size * kernel_size * deformable_groups, 3, ParamGroup::Main, Init::Zero)},
      kernel_(store, name + ".dcn", channels, channels, kernel_size, deformable_groups) {}

Var ReAlign::pre_align(const Var& neighbor, const AlignmentParams& stage2) const {
  return deform_conv(neighbor, stage2, kernel_);
}

AlignResult ReAlign::operator()(const Var& current, const Var& neighbor,
                                const AlignmentParams& stage2) const {
  MSVSR_CHECK(current.shape() == neighbor.shape(), ShapeMismatch,
              "re_align: current " + current.shape().str() + " vs neighbor " + neighbor.shape().str());
  const int taps = kernel_.kernel_size() * kernel_.kernel_size() * kernel_.deformable_groups;
  const Var pre = pre_align(neighbor, stage2);
  const Var residual = head_[1](leaky_relu(head_[0](concat_channels({pre, current}))));
  AlignmentParams params;
  params.offsets = stage2.offsets + slice_channels(residual, 0, 2 * taps);
  params.masks = clamp(stage2.masks + slice_channels(residual, 2 * taps, 3 * taps), 0, 1);
  Var aligned = deform_conv(neighbor, params, kernel_);
  return {aligned, params};
}

MSVSR_NAMESPACE_END
