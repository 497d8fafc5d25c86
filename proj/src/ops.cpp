// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/ops.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "linalg.hpp"

MSVSR_NAMESPACE_BEGIN

namespace {

using linalg::ConstMatrixMap;
using linalg::Matrix;
using linalg::MatrixMap;

// Rows ordered (ci, ki, kj); columns ordered (n, y, x).
void im2col(const Tensor& x, int k, int pad, Matrix& cols) {
  const Shape& s = x.shape();
  const int hw = static_cast<int>(s.plane());
  cols.resize(static_cast<Eigen::Index>(s.c) * k * k, static_cast<Eigen::Index>(s.n) * hw);
  for (int ci = 0; ci < s.c; ++ci) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        Real* row = cols.row((ci * k + ki) * k + kj).data();
        for (int n = 0; n < s.n; ++n) {
          const Real* src = x.plane(n, ci);
          Real* dst = row + static_cast<std::size_t>(n) * hw;
          for (int y = 0; y < s.h; ++y) {
            const int sy = y + ki - pad;
            Real* drow = dst + static_cast<std::size_t>(y) * s.w;
            if (sy < 0 || sy >= s.h) {
              std::fill(drow, drow + s.w, Real(0));
              continue;
            }
            const Real* srow = src + static_cast<std::size_t>(sy) * s.w;
            const int shift = kj - pad;
            const int x0 = std::clamp(-shift, 0, s.w);
            const int x1 = std::clamp(s.w - shift, x0, s.w);
            std::fill(drow, drow + x0, Real(0));
            std::copy(srow + x0 + shift, srow + x1 + shift, drow + x0);
            std::fill(drow + x1, drow + s.w, Real(0));
          }
        }
      }
    }
  }
}

void col2im(const Matrix& cols, int k, int pad, Tensor& grad_x) {
  const Shape& s = grad_x.shape();
  const int hw = static_cast<int>(s.plane());
  for (int ci = 0; ci < s.c; ++ci) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const Real* row = cols.row((ci * k + ki) * k + kj).data();
        for (int n = 0; n < s.n; ++n) {
          Real* dst = grad_x.plane(n, ci);
          const Real* src = row + static_cast<std::size_t>(n) * hw;
          for (int y = 0; y < s.h; ++y) {
            const int sy = y + ki - pad;
            if (sy < 0 || sy >= s.h) continue;
            const Real* srow = src + static_cast<std::size_t>(y) * s.w;
            Real* drow = dst + static_cast<std::size_t>(sy) * s.w;
            const int shift = kj - pad;
            const int x0 = std::clamp(-shift, 0, s.w);
            const int x1 = std::clamp(s.w - shift, x0, s.w);
            for (int xx = x0; xx < x1; ++xx) drow[xx + shift] += srow[xx];
          }
        }
      }
    }
  }
}

// (n, c, hw) tensor <-> (c, n*hw) matrix.
Matrix to_channel_major(const Tensor& t) {
  const Shape& s = t.shape();
  const std::size_t hw = s.plane();
  Matrix m(s.c, static_cast<Eigen::Index>(s.n * hw));
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      std::copy_n(t.plane(n, c), hw, m.row(c).data() + n * hw);
  return m;
}

template <typename F>
Tensor map_values(const Var& x, F&& f) {
  Tensor out(x.shape());
  const Real* in = x.value().data();
  Real* o = out.data();
  for (std::size_t i = 0; i < out.numel(); ++i) o[i] = f(in[i]);
  return out;
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, int padding) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  MSVSR_CHECK(ws.h == ws.w, ShapeMismatch, "conv2d: non-square kernel " + ws.str());
  MSVSR_CHECK(ws.c == xs.c, ShapeMismatch,
              fmt::format("conv2d: input has {} channels, weight expects {}", xs.c, ws.c));
  MSVSR_CHECK(2 * padding == ws.h - 1, ShapeMismatch, "conv2d: only 'same' padding is supported");
  if (bias.defined())
    MSVSR_CHECK(bias.shape().numel() == static_cast<std::size_t>(ws.n), ShapeMismatch,
                "conv2d: bias size mismatch");
  const int k = ws.h;
  const int cout = ws.n;
  const std::size_t hw = xs.plane();

  Matrix cols;
  im2col(x.value(), k, padding, cols);
  ConstMatrixMap wmat(weight.value().data(), cout, static_cast<Eigen::Index>(ws.c) * k * k);
  Matrix out_mat(cout, cols.cols());
  out_mat.noalias() = wmat * cols;

  Tensor out(Shape{xs.n, cout, xs.h, xs.w});
  for (int n = 0; n < xs.n; ++n) {
    for (int co = 0; co < cout; ++co) {
      const Real b = bias.defined() ? bias.value().data()[co] : Real(0);
      const Real* src = out_mat.row(co).data() + n * hw;
      Real* dst = out.plane(n, co);
      for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] + b;
    }
  }

  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return Var::from_op(std::move(out), inputs,
                      [x, weight, bias, padding, k, cout](const Tensor& g, const Tensor&) {
                        const Shape& xs = x.shape();
                        Matrix gmat = to_channel_major(g);
                        if (bias.requires_grad()) {
                          Tensor gb(bias.shape());
                          for (int co = 0; co < cout; ++co) gb.data()[co] = gmat.row(co).sum();
                          bias.accumulate_grad(gb);
                        }
                        const bool need_w = weight.requires_grad();
                        const bool need_x = x.requires_grad();
                        if (!need_w && !need_x) return;
                        const Eigen::Index kdim = static_cast<Eigen::Index>(xs.c) * k * k;
                        if (need_w) {
                          Matrix cols;
                          im2col(x.value(), k, padding, cols);
                          Tensor gw(weight.shape());
                          MatrixMap gwm(gw.data(), cout, kdim);
                          gwm.noalias() = gmat * cols.transpose();
                          weight.accumulate_grad(gw);
                        }
                        if (need_x) {
                          ConstMatrixMap wmat(weight.value().data(), cout, kdim);
                          Matrix gcols(kdim, gmat.cols());
                          gcols.noalias() = wmat.transpose() * gmat;
                          Tensor gx(xs);
                          col2im(gcols, k, padding, gx);
                          x.accumulate_grad(gx);
                        }
                      });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor out = a.value();
  out.add_(b.value());
  return Var::from_op(std::move(out), {a, b}, [a, b](const Tensor& g, const Tensor&) {
    a.accumulate_grad(g);
    b.accumulate_grad(g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor out = a.value();
  const Real* pb = b.value().data();
  Real* po = out.data();
  for (std::size_t i = 0; i < out.numel(); ++i) po[i] -= pb[i];
  return Var::from_op(std::move(out), {a, b}, [a, b](const Tensor& g, const Tensor&) {
    a.accumulate_grad(g);
    if (b.requires_grad()) {
      Tensor neg = g;
      for (Real& v : neg.values()) v = -v;
      b.accumulate_grad(neg);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor out(a.shape());
  const Real* pa = a.value().data();
  const Real* pb = b.value().data();
  Real* po = out.data();
  for (std::size_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * pb[i];
  return Var::from_op(std::move(out), {a, b}, [a, b](const Tensor& g, const Tensor&) {
    if (a.requires_grad()) {
      Tensor ga(g.shape());
      for (std::size_t i = 0; i < g.numel(); ++i) ga.data()[i] = g.data()[i] * b.value().data()[i];
      a.accumulate_grad(ga);
    }
    if (b.requires_grad()) {
      Tensor gb(g.shape());
      for (std::size_t i = 0; i < g.numel(); ++i) gb.data()[i] = g.data()[i] * a.value().data()[i];
      b.accumulate_grad(gb);
    }
  });
}

Var scale(const Var& x, Real factor) {
  Tensor out = x.value();
  for (Real& v : out.values()) v *= factor;
  return Var::from_op(std::move(out), {x}, [x, factor](const Tensor& g, const Tensor&) {
    Tensor gx = g;
    for (Real& v : gx.values()) v *= factor;
    x.accumulate_grad(gx);
  });
}

Var relu(const Var& x) {
  Tensor out = map_values(x, [](Real v) { return v > 0 ? v : Real(0); });
  return Var::from_op(std::move(out), {x}, [x](const Tensor& g, const Tensor&) {
    Tensor gx(g.shape());
    const Real* in = x.value().data();
    for (std::size_t i = 0; i < g.numel(); ++i) gx.data()[i] = in[i] > 0 ? g.data()[i] : Real(0);
    x.accumulate_grad(gx);
  });
}

Var leaky_relu(const Var& x, Real slope) {
  Tensor out = map_values(x, [slope](Real v) { return v > 0 ? v : v * slope; });
  return Var::from_op(std::move(out), {x}, [x, slope](const Tensor& g, const Tensor&) {
    Tensor gx(g.shape());
    const Real* in = x.value().data();
    for (std::size_t i = 0; i < g.numel(); ++i)
      gx.data()[i] = in[i] > 0 ? g.data()[i] : g.data()[i] * slope;
    x.accumulate_grad(gx);
  });
}

Var sigmoid(const Var& x) {
  Tensor out = map_values(x, [](Real v) { return Real(1) / (Real(1) + std::exp(-v)); });
  return Var::from_op(std::move(out), {x}, [x](const Tensor& g, const Tensor& y) {
    Tensor gx(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const Real s = y.data()[i];
      gx.data()[i] = g.data()[i] * s * (Real(1) - s);
    }
    x.accumulate_grad(gx);
  });
}

Var clamp(const Var& x, Real lo, Real hi) {
  Tensor out = map_values(x, [lo, hi](Real v) { return std::clamp(v, lo, hi); });
  return Var::from_op(std::move(out), {x}, [x, lo, hi](const Tensor& g, const Tensor&) {
    Tensor gx(g.shape());
    const Real* in = x.value().data();
    for (std::size_t i = 0; i < g.numel(); ++i)
      gx.data()[i] = (in[i] >= lo && in[i] <= hi) ? g.data()[i] : Real(0);
    x.accumulate_grad(gx);
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  MSVSR_CHECK(!parts.empty(), InvalidArgument, "concat_channels: no inputs");
  const Shape& s0 = parts.front().shape();
  int total = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    MSVSR_CHECK(s.n == s0.n && s.h == s0.h && s.w == s0.w, ShapeMismatch,
                "concat_channels: " + s.str() + " vs " + s0.str());
    total += s.c;
  }
  Tensor out(Shape{s0.n, total, s0.h, s0.w});
  const std::size_t hw = s0.plane();
  for (int n = 0; n < s0.n; ++n) {
    int offset = 0;
    for (const Var& p : parts) {
      const int c = p.shape().c;
      std::copy_n(p.value().plane(n, 0), c * hw, out.plane(n, offset));
      offset += c;
    }
  }
  return Var::from_op(std::move(out), parts, [parts](const Tensor& g, const Tensor&) {
    const Shape& gs = g.shape();
    const std::size_t hw = gs.plane();
    int offset = 0;
    for (const Var& p : parts) {
      const int c = p.shape().c;
      if (p.requires_grad()) {
        Tensor gp(p.shape());
        for (int n = 0; n < gs.n; ++n) std::copy_n(g.plane(n, offset), c * hw, gp.plane(n, 0));
        p.accumulate_grad(gp);
      }
      offset += c;
    }
  });
}

Var slice_channels(const Var& x, int begin, int end) {
  const Shape& s = x.shape();
  MSVSR_CHECK(0 <= begin && begin < end && end <= s.c, ShapeMismatch,
              fmt::format("slice_channels [{}, {}) of {}", begin, end, s.str()));
  const int c = end - begin;
  const std::size_t hw = s.plane();
  Tensor out(Shape{s.n, c, s.h, s.w});
  for (int n = 0; n < s.n; ++n) std::copy_n(x.value().plane(n, begin), c * hw, out.plane(n, 0));
  return Var::from_op(std::move(out), {x}, [x, begin, c](const Tensor& g, const Tensor&) {
    const Shape& s = x.shape();
    const std::size_t hw = s.plane();
    Tensor gx(s);
    for (int n = 0; n < s.n; ++n) std::copy_n(g.plane(n, 0), c * hw, gx.plane(n, begin));
    x.accumulate_grad(gx);
  });
}

Var concat_batch(const std::vector<Var>& parts) {
  MSVSR_CHECK(!parts.empty(), InvalidArgument, "concat_batch: no inputs");
  const Shape& s0 = parts.front().shape();
  int total = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    MSVSR_CHECK(s.c == s0.c && s.h == s0.h && s.w == s0.w, ShapeMismatch,
                "concat_batch: " + s.str() + " vs " + s0.str());
    total += s.n;
  }
  Tensor out(Shape{total, s0.c, s0.h, s0.w});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy_n(p.value().data(), p.value().numel(), out.data() + offset);
    offset += p.value().numel();
  }
  return Var::from_op(std::move(out), parts, [parts](const Tensor& g, const Tensor&) {
    std::size_t offset = 0;
    for (const Var& p : parts) {
      const std::size_t count = p.shape().numel();
      if (p.requires_grad()) {
        Tensor gp(p.shape());
        std::copy_n(g.data() + offset, count, gp.data());
        p.accumulate_grad(gp);
      }
      offset += count;
    }
  });
}

Var slice_batch(const Var& x, int begin, int end) {
  const Shape& s = x.shape();
  MSVSR_CHECK(0 <= begin && begin < end && end <= s.n, ShapeMismatch,
              fmt::format("slice_batch [{}, {}) of {}", begin, end, s.str()));
  const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
  Tensor out(Shape{end - begin, s.c, s.h, s.w});
  std::copy_n(x.value().data() + begin * per, out.numel(), out.data());
  return Var::from_op(std::move(out), {x}, [x, begin, per](const Tensor& g, const Tensor&) {
    Tensor gx(x.shape());
    std::copy_n(g.data(), g.numel(), gx.data() + begin * per);
    x.accumulate_grad(gx);
  });
}

Var tile_channels(const Var& x, int reps) {
  MSVSR_CHECK(reps >= 1, InvalidArgument, "tile_channels: reps must be >= 1");
  const Shape& s = x.shape();
  const std::size_t block = static_cast<std::size_t>(s.c) * s.plane();
  Tensor out(Shape{s.n, s.c * reps, s.h, s.w});
  for (int n = 0; n < s.n; ++n)
    for (int r = 0; r < reps; ++r) std::copy_n(x.value().plane(n, 0), block, out.plane(n, r * s.c));
  return Var::from_op(std::move(out), {x}, [x, reps, block](const Tensor& g, const Tensor&) {
    const Shape& s = x.shape();
    Tensor gx(s);
    for (int n = 0; n < s.n; ++n) {
      Real* dst = gx.plane(n, 0);
      for (int r = 0; r < reps; ++r) {
        const Real* src = g.plane(n, r * s.c);
        for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
      }
    }
    x.accumulate_grad(gx);
  });
}

Var pixel_shuffle(const Var& x, int r) {
  const Shape& s = x.shape();
  MSVSR_CHECK(r >= 1 && s.c % (r * r) == 0, ShapeMismatch,
              fmt::format("pixel_shuffle: {} channels not divisible by {}", s.c, r * r));
  const int co = s.c / (r * r);
  Tensor out(Shape{s.n, co, s.h * r, s.w * r});
  const int ow = s.w * r;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < co; ++c)
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          const Real* src = x.value().plane(n, c * r * r + i * r + j);
          Real* dst = out.plane(n, c);
          for (int h = 0; h < s.h; ++h)
            for (int w = 0; w < s.w; ++w) dst[(h * r + i) * ow + w * r + j] = src[h * s.w + w];
        }
  return Var::from_op(std::move(out), {x}, [x, r, co](const Tensor& g, const Tensor&) {
    const Shape& s = x.shape();
    const int ow = s.w * r;
    Tensor gx(s);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < co; ++c)
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < r; ++j) {
            Real* dst = gx.plane(n, c * r * r + i * r + j);
            const Real* src = g.plane(n, c);
            for (int h = 0; h < s.h; ++h)
              for (int w = 0; w < s.w; ++w) dst[h * s.w + w] = src[(h * r + i) * ow + w * r + j];
          }
    x.accumulate_grad(gx);
  });
}

namespace {

struct Interp {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<Real> frac;
};

Interp interp_table(int in, int factor) {
  Interp t;
  const int out = in * factor;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) / factor - 0.5;
    if (src < 0) src = 0;
    const int i0 = std::min(static_cast<int>(std::floor(src)), in - 1);
    t.lo[o] = i0;
    t.hi[o] = std::min(i0 + 1, in - 1);
    t.frac[o] = static_cast<Real>(src - i0);
  }
  return t;
}

}  // namespace

Var upsample_bilinear(const Var& x, int factor) {
  MSVSR_CHECK(factor >= 1, InvalidArgument, "upsample_bilinear: factor must be >= 1");
  const Shape& s = x.shape();
  const Interp ty = interp_table(s.h, factor);
  const Interp tx = interp_table(s.w, factor);
  const int oh = s.h * factor;
  const int ow = s.w * factor;
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const Real* src = x.value().plane(n, c);
      Real* dst = out.plane(n, c);
      for (int oy = 0; oy < oh; ++oy) {
        const Real* r0 = src + ty.lo[oy] * s.w;
        const Real* r1 = src + ty.hi[oy] * s.w;
        const Real ly = ty.frac[oy];
        for (int ox = 0; ox < ow; ++ox) {
          const Real lx = tx.frac[ox];
          const Real top = (1 - lx) * r0[tx.lo[ox]] + lx * r0[tx.hi[ox]];
          const Real bot = (1 - lx) * r1[tx.lo[ox]] + lx * r1[tx.hi[ox]];
          dst[oy * ow + ox] = (1 - ly) * top + ly * bot;
        }
      }
    }
  return Var::from_op(std::move(out), {x}, [x, ty, tx, oh, ow](const Tensor& g, const Tensor&) {
    const Shape& s = x.shape();
    Tensor gx(s);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const Real* src = g.plane(n, c);
        Real* dst = gx.plane(n, c);
        for (int oy = 0; oy < oh; ++oy) {
          Real* r0 = dst + ty.lo[oy] * s.w;
          Real* r1 = dst + ty.hi[oy] * s.w;
          const Real ly = ty.frac[oy];
          for (int ox = 0; ox < ow; ++ox) {
            const Real v = src[oy * ow + ox];
            const Real lx = tx.frac[ox];
            r0[tx.lo[ox]] += (1 - ly) * (1 - lx) * v;
            r0[tx.hi[ox]] += (1 - ly) * lx * v;
            r1[tx.lo[ox]] += ly * (1 - lx) * v;
            r1[tx.hi[ox]] += ly * lx * v;
          }
        }
      }
    x.accumulate_grad(gx);
  });
}

Var avg_pool2(const Var& x) {
  const Shape& s = x.shape();
  MSVSR_CHECK(s.h % 2 == 0 && s.w % 2 == 0, ShapeMismatch, "avg_pool2: odd extent " + s.str());
  const int oh = s.h / 2;
  const int ow = s.w / 2;
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const Real* src = x.value().plane(n, c);
      Real* dst = out.plane(n, c);
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          const Real* p = src + 2 * y * s.w + 2 * xx;
          dst[y * ow + xx] = Real(0.25) * (p[0] + p[1] + p[s.w] + p[s.w + 1]);
        }
    }
  return Var::from_op(std::move(out), {x}, [x, oh, ow](const Tensor& g, const Tensor&) {
    const Shape& s = x.shape();
    Tensor gx(s);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const Real* src = g.plane(n, c);
        Real* dst = gx.plane(n, c);
        for (int y = 0; y < oh; ++y)
          for (int xx = 0; xx < ow; ++xx) {
            const Real v = Real(0.25) * src[y * ow + xx];
            Real* p = dst + 2 * y * s.w + 2 * xx;
            p[0] += v;
            p[1] += v;
            p[s.w] += v;
            p[s.w + 1] += v;
          }
      }
    x.accumulate_grad(gx);
  });
}

Var pad_bottom_right(const Var& x, int pad_h, int pad_w) {
  MSVSR_CHECK(pad_h >= 0 && pad_w >= 0, InvalidArgument, "pad_bottom_right: negative padding");
  if (pad_h == 0 && pad_w == 0) return x;
  const Shape& s = x.shape();
  const int oh = s.h + pad_h;
  const int ow = s.w + pad_w;
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        std::copy_n(x.value().plane(n, c) + y * s.w, s.w, out.plane(n, c) + y * ow);
  return Var::from_op(std::move(out), {x}, [x, ow](const Tensor& g, const Tensor&) {
    const Shape& s = x.shape();
    Tensor gx(s);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < s.h; ++y) std::copy_n(g.plane(n, c) + y * ow, s.w, gx.plane(n, c) + y * s.w);
    x.accumulate_grad(gx);
  });
}

Var crop_top_left(const Var& x, int h, int w) {
  const Shape& s = x.shape();
  MSVSR_CHECK(h >= 1 && w >= 1 && h <= s.h && w <= s.w, ShapeMismatch,
              fmt::format("crop_top_left {}x{} of {}", h, w, s.str()));
  if (h == s.h && w == s.w) return x;
  Tensor out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < h; ++y) std::copy_n(x.value().plane(n, c) + y * s.w, w, out.plane(n, c) + y * w);
  return Var::from_op(std::move(out), {x}, [x, h, w](const Tensor& g, const Tensor&) {
    const Shape& s = x.shape();
    Tensor gx(s);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < h; ++y) std::copy_n(g.plane(n, c) + y * w, w, gx.plane(n, c) + y * s.w);
    x.accumulate_grad(gx);
  });
}

Var mean(const Var& x) {
  const std::size_t count = x.value().numel();
  MSVSR_CHECK(count > 0, InvalidArgument, "mean of empty tensor");
  double acc = 0;
  for (Real v : x.value().values()) acc += v;
  return Var::from_op(Tensor::scalar(static_cast<Real>(acc / count)), {x},
                      [x, count](const Tensor& g, const Tensor&) {
                        x.accumulate_grad(Tensor(x.shape(), g.item() / static_cast<Real>(count)));
                      });
}

Var zeros(Shape shape) { return Var(Tensor(shape)); }

MSVSR_NAMESPACE_END
