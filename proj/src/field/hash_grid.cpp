// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/field/hash_grid.hpp"

#include <algorithm>
#include <cmath>

namespace dnf {

void HashGridConfig::validate() const {
  if (num_levels < 1) throw ConfigError("field: num_levels must be >= 1");
  if (base_resolution < 1) throw ConfigError("field: base_resolution must be >= 1");
  if (base_resolution > max_resolution) {
    throw ConfigError("field: base_resolution must not exceed max_resolution");
  }
  if (features_per_level < 1) throw ConfigError("field: features_per_level must be >= 1");
  if (table_size_log2 < 4 || table_size_log2 > 30) {
    throw ConfigError("field: table_size_log2 must lie in [4, 30]");
  }
  for (int a = 0; a < 3; ++a) {
    if (!(bounding_box.hi[a] > bounding_box.lo[a])) {
      throw ConfigError("field: bounding box must have positive extent");
    }
  }
}

int HashGridConfig::resolution(int level) const {
  if (num_levels == 1) return base_resolution;
  const double growth = std::exp((std::log(static_cast<double>(max_resolution)) -
                                  std::log(static_cast<double>(base_resolution))) /
                                 static_cast<double>(num_levels - 1));
  const double r = static_cast<double>(base_resolution) * std::pow(growth, level);
  // The tiny slack keeps the last level exactly at max_resolution.
  return std::min(max_resolution, static_cast<int>(std::floor(r + 1e-9)));
}

bool HashGridConfig::level_is_dense(int level) const {
  const double verts = static_cast<double>(resolution(level)) + 1.0;
  return verts * verts * verts <= std::ldexp(1.0, table_size_log2);
}

std::size_t HashGridConfig::level_entries(int level) const {
  const std::size_t table = std::size_t{1} << table_size_log2;
  if (!level_is_dense(level)) return table;
  const std::size_t verts = static_cast<std::size_t>(resolution(level)) + 1;
  return verts * verts * verts;
}

std::size_t HashGridConfig::level_offset(int level) const {
  std::size_t offset = 0;
  for (int l = 0; l < level; ++l) {
    offset += level_entries(l) * static_cast<std::size_t>(features_per_level);
  }
  return offset;
}

std::size_t HashGridConfig::param_count() const { return level_offset(num_levels); }

std::uint32_t spatial_hash(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
  constexpr std::uint32_t kPrimeY = 2654435761u;
  constexpr std::uint32_t kPrimeZ = 805459861u;
  return x ^ (y * kPrimeY) ^ (z * kPrimeZ);
}

HashGridEncoder::HashGridEncoder(HashGridConfig config) : config_(config) {
  config_.validate();
  for (int l = 0; l < config_.num_levels; ++l) {
    resolutions_.push_back(config_.resolution(l));
    offsets_.push_back(config_.level_offset(l));
    entries_.push_back(config_.level_entries(l));
    dense_.push_back(config_.level_is_dense(l));
  }
}

LevelCorners HashGridEncoder::corners(const Vec3& p, int level) const {
  const Aabb& box = config_.bounding_box;
  const int res = resolutions_[static_cast<std::size_t>(level)];
  const bool dense = dense_[static_cast<std::size_t>(level)];
  const auto entries = static_cast<std::uint32_t>(entries_[static_cast<std::size_t>(level)]);
  const std::uint32_t verts = static_cast<std::uint32_t>(res) + 1;

  LevelCorners out;
  std::array<std::uint32_t, 3> cell{};
  for (int a = 0; a < 3; ++a) {
    const double extent = box.hi[a] - box.lo[a];
    double u = (p[a] - box.lo[a]) / extent;
    out.clamped[static_cast<std::size_t>(a)] = u < 0.0 || u > 1.0;
    u = std::clamp(u, 0.0, 1.0);
    const double pos = u * res;
    const int c = std::min(static_cast<int>(std::floor(pos)), res - 1);
    cell[static_cast<std::size_t>(a)] = static_cast<std::uint32_t>(c);
    out.frac[static_cast<std::size_t>(a)] = pos - c;
  }

  for (int k = 0; k < 8; ++k) {
    const std::uint32_t ox = k & 1;
    const std::uint32_t oy = (k >> 1) & 1;
    const std::uint32_t oz = (k >> 2) & 1;
    const std::uint32_t x = cell[0] + ox;
    const std::uint32_t y = cell[1] + oy;
    const std::uint32_t z = cell[2] + oz;
    const double wx = ox ? out.frac[0] : 1.0 - out.frac[0];
    const double wy = oy ? out.frac[1] : 1.0 - out.frac[1];
    const double wz = oz ? out.frac[2] : 1.0 - out.frac[2];
    out.weight[static_cast<std::size_t>(k)] = wx * wy * wz;
    out.row[static_cast<std::size_t>(k)] =
        dense ? x + y * verts + z * verts * verts : spatial_hash(x, y, z) & (entries - 1);
  }
  return out;
}

void HashGridEncoder::encode(const Vec3& p, std::span<const double> params,
                             std::span<double> out) const {
  const int feats = config_.features_per_level;
  for (int l = 0; l < config_.num_levels; ++l) {
    const LevelCorners lc = corners(p, l);
    const std::size_t base = offsets_[static_cast<std::size_t>(l)];
    double* dst = out.data() + static_cast<std::ptrdiff_t>(l) * feats;
    for (int f = 0; f < feats; ++f) dst[f] = 0.0;
    for (int k = 0; k < 8; ++k) {
      const double w = lc.weight[static_cast<std::size_t>(k)];
      const double* row =
          params.data() + base + static_cast<std::size_t>(lc.row[static_cast<std::size_t>(k)]) *
                                     static_cast<std::size_t>(feats);
      for (int f = 0; f < feats; ++f) dst[f] += w * row[f];
    }
  }
}

void HashGridEncoder::backward(const Vec3& p, std::span<const double> d_features,
                               std::span<double> param_grad) const {
  const int feats = config_.features_per_level;
  for (int l = 0; l < config_.num_levels; ++l) {
    const double* src = d_features.data() + static_cast<std::ptrdiff_t>(l) * feats;
    bool any = false;
    for (int f = 0; f < feats; ++f) any = any || src[f] != 0.0;
    if (!any) continue;
    const LevelCorners lc = corners(p, l);
    const std::size_t base = offsets_[static_cast<std::size_t>(l)];
    for (int k = 0; k < 8; ++k) {
      const double w = lc.weight[static_cast<std::size_t>(k)];
      if (w == 0.0) continue;
      double* row = param_grad.data() + base +
                    static_cast<std::size_t>(lc.row[static_cast<std::size_t>(k)]) *
                        static_cast<std::size_t>(feats);
      for (int f = 0; f < feats; ++f) row[f] += w * src[f];
    }
  }
}

Vec3 HashGridEncoder::position_gradient(const Vec3& p, std::span<const double> params,
                                        std::span<const double> d_features) const {
  const Aabb& box = config_.bounding_box;
  const int feats = config_.features_per_level;
  Vec3 grad;
  for (int l = 0; l < config_.num_levels; ++l) {
    const LevelCorners lc = corners(p, l);
    const std::size_t base = offsets_[static_cast<std::size_t>(l)];
    const double res = resolutions_[static_cast<std::size_t>(l)];
    const double* src = d_features.data() + static_cast<std::ptrdiff_t>(l) * feats;
    for (int k = 0; k < 8; ++k) {
      const double* row =
          params.data() + base + static_cast<std::size_t>(lc.row[static_cast<std::size_t>(k)]) *
                                     static_cast<std::size_t>(feats);
      double contrib = 0.0;
      for (int f = 0; f < feats; ++f) contrib += row[f] * src[f];
      if (contrib == 0.0) continue;
      for (int a = 0; a < 3; ++a) {
        if (lc.clamped[static_cast<std::size_t>(a)]) continue;
        // Derivative of the corner weight along axis a.
        double dw = (k >> a) & 1 ? 1.0 : -1.0;
        for (int b = 0; b < 3; ++b) {
          if (b == a) continue;
          const double fb = lc.frac[static_cast<std::size_t>(b)];
          dw *= ((k >> b) & 1) ? fb : 1.0 - fb;
        }
        grad[a] += contrib * dw * res / (box.hi[a] - box.lo[a]);
      }
    }
  }
  return grad;
}

}  // namespace dnf
