// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "msvsr/autograd.hpp"

MSVSR_NAMESPACE_BEGIN

// Differentiable tensor operations. All spatial ops use NCHW layout and
// stride 1; shape errors raise ErrorKind::ShapeMismatch.

/// Stride-1 cross-correlation with zero padding. `weight` is (out, in, k, k);
/// `bias` may be undefined.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int padding);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, Real factor);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, Real s) { return scale(a, s); }

Var relu(const Var& x);
Var leaky_relu(const Var& x, Real slope = Real(0.1));
Var sigmoid(const Var& x);
/// Gradient passes where lo <= x <= hi.
Var clamp(const Var& x, Real lo, Real hi);

Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(const Var& x, int begin, int end);
Var concat_batch(const std::vector<Var>& parts);
Var slice_batch(const Var& x, int begin, int end);
/// Repeats the channel block `reps` times: (n, c, h, w) -> (n, c*reps, h, w).
Var tile_channels(const Var& x, int reps);

/// (n, c*r*r, h, w) -> (n, c, h*r, w*r) with
/// out[n, c, h*r + i, w*r + j] = in[n, c*r*r + i*r + j, h, w].
Var pixel_shuffle(const Var& x, int r);

/// Bilinear resize by an integer factor, half-pixel centres, edge clamped.
Var upsample_bilinear(const Var& x, int factor);
/// 2x2 mean pooling; spatial dims must be even.
Var avg_pool2(const Var& x);

/// Zero-pads at the bottom and right edges.
Var pad_bottom_right(const Var& x, int pad_h, int pad_w);
/// Keeps the top-left h x w window.
Var crop_top_left(const Var& x, int h, int w);

/// Mean over all elements, as a 1x1x1x1 value.
Var mean(const Var& x);

Var zeros(Shape shape);

MSVSR_NAMESPACE_END
