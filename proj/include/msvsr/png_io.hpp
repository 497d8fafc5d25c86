// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "msvsr/data.hpp"

MSVSR_NAMESPACE_BEGIN

/// round(clamp(v, 0, 1) * 255)
std::uint8_t quantize_u8(float v);

/// Any PNG is converted to 8-bit RGB and scaled to [0, 1].
Image read_png(const std::filesystem::path& path);
/// Writes 8-bit RGB; single-channel images are written as gray RGB.
void write_png(const std::filesystem::path& path, const Image& image);

MSVSR_NAMESPACE_END
