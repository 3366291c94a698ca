// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "dnf/core/types.hpp"

namespace dnf {

/// 8-bit PNG, gray for 1 channel and RGB for 3. Values are clamped to [0, 1].
void write_png(const std::filesystem::path& path, const Image& image);
/// Gray, gray+alpha, RGB or RGBA PNG (8 or 16 bit) as values in [0, 1].
/// Alpha is dropped. Throws FormatError on unreadable files.
Image read_png(const std::filesystem::path& path);

/// Raw float raster: "DNFD", u32 width, u32 height, u32 channels, then
/// width * height * channels little-endian f32 values in row-major order.
void write_raster(const std::filesystem::path& path, const Image& image);
Image read_raster(const std::filesystem::path& path);

/// Tiles equally sized images into `columns` columns, padding with `fill`.
Image contact_sheet(const std::vector<Image>& tiles, int columns, double fill = 1.0);

/// Gray visualization of a depth map: near is bright; pixels with opacity
/// at or below 0.5 are black.
Image depth_preview(const Image& depth, const Image& opacity);

}  // namespace dnf
