// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

// Reference deformable convolution: every output value is an explicit sum
// over input channels and kernel taps with its own scalar bilinear lookup.

#include <cmath>

#include <fmt/format.h>

#include "msvsr/deform.hpp"

MSVSR_NAMESPACE_BEGIN

namespace {

double pixel_or_zero(const Tensor& t, int n, int c, int y, int x) {
  const Shape& s = t.shape();
  if (y < 0 || y >= s.h || x < 0 || x >= s.w) return 0.0;
  return static_cast<double>(t.at(n, c, y, x));
}

double bilinear_at(const Tensor& t, int n, int c, double y, double x) {
  const double y0 = std::floor(y);
  const double x0 = std::floor(x);
  const double ay = y - y0;
  const double ax = x - x0;
  const int iy = static_cast<int>(y0);
  const int ix = static_cast<int>(x0);
  return (1 - ay) * (1 - ax) * pixel_or_zero(t, n, c, iy, ix) +
         (1 - ay) * ax * pixel_or_zero(t, n, c, iy, ix + 1) +
         ay * (1 - ax) * pixel_or_zero(t, n, c, iy + 1, ix) +
         ay * ax * pixel_or_zero(t, n, c, iy + 1, ix + 1);
}

}  // namespace

Tensor deform_conv_oracle(const Tensor& input, const Tensor& offsets, const Tensor& masks,
                          const Tensor& weight, const Tensor& bias, int groups,
                          int deformable_groups) {
  const Shape& in = input.shape();
  const Shape& ws = weight.shape();
  const int k = ws.h;
  const int kk = k * k;
  MSVSR_CHECK(ws.h == ws.w && k % 2 == 1, ShapeMismatch, "oracle: kernel must be square and odd");
  MSVSR_CHECK(groups >= 1 && in.c % groups == 0 && ws.n % groups == 0 && ws.c * groups == in.c,
              ShapeMismatch, "oracle: group/channel mismatch");
  MSVSR_CHECK(deformable_groups >= 1 && in.c % deformable_groups == 0, ShapeMismatch,
              "oracle: deformable group mismatch");
  MSVSR_CHECK(offsets.shape() == (Shape{in.n, 2 * kk * deformable_groups, in.h, in.w}), ShapeMismatch,
              "oracle: offsets shape " + offsets.shape().str());
  MSVSR_CHECK(masks.shape() == (Shape{in.n, kk * deformable_groups, in.h, in.w}), ShapeMismatch,
              "oracle: masks shape " + masks.shape().str());
  for (Real m : masks.values())
    MSVSR_CHECK(m >= 0 && m <= 1, InvariantViolation, "oracle: mask outside [0, 1]");

  const int in_per_group = in.c / groups;
  const int out_per_group = ws.n / groups;
  const int channels_per_dg = in.c / deformable_groups;
  const int r = k / 2;
  Tensor out(Shape{in.n, ws.n, in.h, in.w});
  for (int n = 0; n < in.n; ++n)
    for (int co = 0; co < ws.n; ++co) {
      const int group = co / out_per_group;
      for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
          double acc = bias.empty() ? 0.0 : static_cast<double>(bias.values()[co]);
          for (int cl = 0; cl < in_per_group; ++cl) {
            const int ci = group * in_per_group + cl;
            const int dg = ci / channels_per_dg;
            for (int ki = 0; ki < k; ++ki)
              for (int kj = 0; kj < k; ++kj) {
                const int tap = dg * kk + ki * k + kj;
                const double dx = offsets.at(n, 2 * tap, y, x);
                const double dy = offsets.at(n, 2 * tap + 1, y, x);
                const double m = masks.at(n, tap, y, x);
                const double v = bilinear_at(input, n, ci, y + ki - r + dy, x + kj - r + dx);
                acc += static_cast<double>(weight.at(co, cl, ki, kj)) * m * v;
              }
          }
          out.at(n, co, y, x) = static_cast<Real>(acc);
        }
    }
  return out;
}

Tensor deform_conv_oracle(const Tensor& input, const AlignmentParams& params,
                          const DeformKernel& kernel) {
  return deform_conv_oracle(input, params.offsets.value(), params.masks.value(),
                            kernel.weight.value(), kernel.bias.value(), kernel.groups,
                            kernel.deformable_groups);
}

MSVSR_NAMESPACE_END
