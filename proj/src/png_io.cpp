// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <vector>

MSVSR_NAMESPACE_BEGIN

std::uint8_t quantize_u8(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0));
}

Image read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    raise(ErrorKind::IOError, "cannot read " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    raise(ErrorKind::IOError, "cannot decode " + path.string() + ": " + img.message);
  }
  const int h = static_cast<int>(img.height);
  const int w = static_cast<int>(img.width);
  Image out(3, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(c, y, x) = static_cast<float>(buffer[(static_cast<std::size_t>(y) * w + x) * 3 + c]) / 255.0f;
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  MSVSR_CHECK(image.channels == 3 || image.channels == 1, ShapeMismatch,
              "write_png expects 1 or 3 channels");
  std::vector<png_byte> buffer(static_cast<std::size_t>(image.height) * image.width * 3);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c)
        buffer[(static_cast<std::size_t>(y) * image.width + x) * 3 + c] =
            quantize_u8(image.at(image.channels == 3 ? c : 0, y, x));
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr))
    raise(ErrorKind::IOError, "cannot write " + path.string() + ": " + img.message);
}

MSVSR_NAMESPACE_END
