// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/io/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "dnf/io/binary.hpp"

namespace dnf {

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw std::invalid_argument("write_png: need 1 or 3 channels, got " + image.shape_string());
  }
  std::vector<png_byte> bytes(image.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::isfinite(image.data[i]) ? std::clamp(image.data[i], 0.0, 1.0) : 0.0;
    bytes[i] = static_cast<png_byte>(std::lround(v * 255.0));
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw std::runtime_error("cannot write " + path.string() + ": " + msg);
  }
}

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw FormatError("cannot read PNG " + path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  Image out(static_cast<int>(png.width), static_cast<int>(png.height), channels);
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = bytes[i] / 255.0;
  return out;
}

void write_raster(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write("DNFD", 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(image.width));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(image.height));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(image.channels));
  for (double v : image.data) write_le<float>(out, static_cast<float>(v));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Image read_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open raster " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DNFD", 4) != 0) {
    throw FormatError(path.string() + " is not a DNFD raster (bad magic)");
  }
  const auto w = read_le<std::uint32_t>(in);
  const auto h = read_le<std::uint32_t>(in);
  const auto c = read_le<std::uint32_t>(in);
  constexpr std::uint32_t kMaxSide = 1u << 15;
  if (w > kMaxSide || h > kMaxSide || c == 0 || c > 64) {
    throw FormatError(path.string() + ": implausible raster shape");
  }
  Image out(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  for (double& v : out.data) v = read_le<float>(in);
  return out;
}

Image contact_sheet(const std::vector<Image>& tiles, int columns, double fill) {
  if (tiles.empty()) return {};
  if (columns < 1) throw std::invalid_argument("contact_sheet: columns must be >= 1");
  const Image& first = tiles.front();
  for (const Image& t : tiles) {
    if (!t.same_shape(first)) throw std::invalid_argument("contact_sheet: tiles differ in shape");
  }
  const int n = static_cast<int>(tiles.size());
  const int cols = std::min(columns, n);
  const int rows = (n + cols - 1) / cols;
  Image sheet(first.width * cols, first.height * rows, first.channels, fill);
  for (int i = 0; i < n; ++i) {
    const int ox = (i % cols) * first.width;
    const int oy = (i / cols) * first.height;
    for (int y = 0; y < first.height; ++y) {
      for (int x = 0; x < first.width; ++x) {
        for (int c = 0; c < first.channels; ++c) {
          sheet.at(ox + x, oy + y, c) = tiles[static_cast<std::size_t>(i)].at(x, y, c);
        }
      }
    }
  }
  return sheet;
}

Image depth_preview(const Image& depth, const Image& opacity) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    if (opacity.data[i] <= 0.5) continue;
    lo = std::min(lo, depth.data[i]);
    hi = std::max(hi, depth.data[i]);
  }
  Image out(depth.width, depth.height, 1);
  if (!(hi >= lo)) return out;
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    if (opacity.data[i] > 0.5) out.data[i] = 1.0 - 0.8 * (depth.data[i] - lo) / span;
  }
  return out;
}

}  // namespace dnf
