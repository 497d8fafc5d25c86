// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Straightforward scalar-loop metric definitions used to cross-check the
// library's PSNR / SSIM.

#include <algorithm>
#include <cmath>
#include <vector>

#include "msvsr/data.hpp"

MSVSR_NAMESPACE_BEGIN
namespace testing {

struct OraclePlanes {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;
  double at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
};

inline double to_u8(float x) { return std::round(std::min(1.0, std::max(0.0, static_cast<double>(x))) * 255.0); }

inline OraclePlanes oracle_planes(const Image& img, bool luma, int crop) {
  OraclePlanes p;
  p.h = img.height - 2 * crop;
  p.w = img.width - 2 * crop;
  p.c = luma ? 1 : img.channels;
  for (int ch = 0; ch < p.c; ++ch)
    for (int y = crop; y < img.height - crop; ++y)
      for (int x = crop; x < img.width - crop; ++x) {
        if (luma) {
          const double r = to_u8(img.at(0, y, x)), g = to_u8(img.at(1, y, x)), b = to_u8(img.at(2, y, x));
          p.v.push_back(16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0);
        } else {
          p.v.push_back(to_u8(img.at(ch, y, x)));
        }
      }
  return p;
}

inline double mse_oracle(const Image& a, const Image& b, bool luma, int crop) {
  const OraclePlanes pa = oracle_planes(a, luma, crop), pb = oracle_planes(b, luma, crop);
  double s = 0;
  for (std::size_t i = 0; i < pa.v.size(); ++i) s += (pa.v[i] - pb.v[i]) * (pa.v[i] - pb.v[i]);
  return s / pa.v.size();
}

inline double psnr_oracle(const Image& a, const Image& b, bool luma, int crop = 0) {
  const double mse = mse_oracle(a, b, luma, crop);
  return mse == 0 ? INFINITY : 10 * std::log10(255.0 * 255.0 / mse);
}

inline double ssim_oracle(const Image& a, const Image& b, bool luma, int crop = 0) {
  const OraclePlanes pa = oracle_planes(a, luma, crop), pb = oracle_planes(b, luma, crop);
  double w[11][11], wsum = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
      wsum += w[i][j];
    }
  const double c1 = 6.5025, c2 = 58.5225;
  double total = 0;
  int count = 0;
  for (int ch = 0; ch < pa.c; ++ch)
    for (int y = 0; y + 11 <= pa.h; ++y)
      for (int x = 0; x + 11 <= pa.w; ++x) {
        double ma = 0, mb = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            ma += w[i][j] / wsum * pa.at(ch, y + i, x + j);
            mb += w[i][j] / wsum * pb.at(ch, y + i, x + j);
          }
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const double da = pa.at(ch, y + i, x + j) - ma, db = pb.at(ch, y + i, x + j) - mb;
            va += w[i][j] / wsum * da * da;
            vb += w[i][j] / wsum * db * db;
            cov += w[i][j] / wsum * da * db;
          }
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

}  // namespace testing
MSVSR_NAMESPACE_END
