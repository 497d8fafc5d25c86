// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "msvsr/common.hpp"

MSVSR_NAMESPACE_BEGIN
namespace bilinear {

// Shared sampling contract for warp and deformable convolution: bilinear
// interpolation at (y, x) in pixel coordinates; each of the four corners that
// falls outside the plane contributes zero.

struct Corners {
  int y0, x0;
  Real ly, lx;
  bool in_y0, in_y1, in_x0, in_x1;
};

inline bool corners(Real y, Real x, int h, int w, Corners& c) {
  if (!(y > -1 && y < h && x > -1 && x < w)) return false;
  const Real fy = std::floor(y);
  const Real fx = std::floor(x);
  c.y0 = static_cast<int>(fy);
  c.x0 = static_cast<int>(fx);
  c.ly = y - fy;
  c.lx = x - fx;
  c.in_y0 = c.y0 >= 0;
  c.in_y1 = c.y0 + 1 <= h - 1;
  c.in_x0 = c.x0 >= 0;
  c.in_x1 = c.x0 + 1 <= w - 1;
  return true;
}

inline Real sample(const Real* plane, int h, int w, Real y, Real x) {
  Corners c;
  if (!corners(y, x, h, w, c)) return 0;
  const Real v00 = (c.in_y0 && c.in_x0) ? plane[c.y0 * w + c.x0] : Real(0);
  const Real v01 = (c.in_y0 && c.in_x1) ? plane[c.y0 * w + c.x0 + 1] : Real(0);
  const Real v10 = (c.in_y1 && c.in_x0) ? plane[(c.y0 + 1) * w + c.x0] : Real(0);
  const Real v11 = (c.in_y1 && c.in_x1) ? plane[(c.y0 + 1) * w + c.x0 + 1] : Real(0);
  const Real hy = 1 - c.ly;
  const Real hx = 1 - c.lx;
  return hy * hx * v00 + hy * c.lx * v01 + c.ly * hx * v10 + c.ly * c.lx * v11;
}

/// Scatters `g` into `grad_plane` (if non-null) and returns d(sample)/dy and
/// d(sample)/dx through `dy`, `dx`.
inline void backward(const Real* plane, Real* grad_plane, int h, int w, Real y, Real x, Real g,
                     Real& dy, Real& dx) {
  dy = dx = 0;
  Corners c;
  if (!corners(y, x, h, w, c)) return;
  const bool i00 = c.in_y0 && c.in_x0, i01 = c.in_y0 && c.in_x1;
  const bool i10 = c.in_y1 && c.in_x0, i11 = c.in_y1 && c.in_x1;
  const Real v00 = i00 ? plane[c.y0 * w + c.x0] : Real(0);
  const Real v01 = i01 ? plane[c.y0 * w + c.x0 + 1] : Real(0);
  const Real v10 = i10 ? plane[(c.y0 + 1) * w + c.x0] : Real(0);
  const Real v11 = i11 ? plane[(c.y0 + 1) * w + c.x0 + 1] : Real(0);
  const Real hy = 1 - c.ly;
  const Real hx = 1 - c.lx;
  dy = hx * (v10 - v00) + c.lx * (v11 - v01);
  dx = hy * (v01 - v00) + c.ly * (v11 - v10);
  if (grad_plane) {
    if (i00) grad_plane[c.y0 * w + c.x0] += hy * hx * g;
    if (i01) grad_plane[c.y0 * w + c.x0 + 1] += hy * c.lx * g;
    if (i10) grad_plane[(c.y0 + 1) * w + c.x0] += c.ly * hx * g;
    if (i11) grad_plane[(c.y0 + 1) * w + c.x0 + 1] += c.ly * c.lx * g;
  }
}

}  // namespace bilinear
MSVSR_NAMESPACE_END
