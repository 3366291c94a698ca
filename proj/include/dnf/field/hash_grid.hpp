// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dnf/core/types.hpp"

namespace dnf {

struct HashGridConfig {
  int num_levels = 16;
  int base_resolution = 16;
  int max_resolution = 2048;
  int features_per_level = 2;
  int table_size_log2 = 19;
  Aabb bounding_box;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  /// Cells per axis at `level`; grows geometrically from base to max.
  int resolution(int level) const;
  /// Feature-table rows at `level`. Coarse levels whose full vertex lattice
  /// fits in the table are indexed densely, finer ones through the hash.
  std::size_t level_entries(int level) const;
  bool level_is_dense(int level) const;
  std::size_t level_offset(int level) const;
  std::size_t param_count() const;
  int feature_dim() const { return num_levels * features_per_level; }
};

/// The 8 lattice corners surrounding a point on one level, with their
/// trilinear weights and table rows.
struct LevelCorners {
  std::array<std::uint32_t, 8> row{};
  std::array<double, 8> weight{};
  std::array<double, 3> frac{};
  std::array<bool, 3> clamped{};
};

class HashGridEncoder {
 public:
  explicit HashGridEncoder(HashGridConfig config);

  const HashGridConfig& config() const { return config_; }

  LevelCorners corners(const Vec3& p, int level) const;

  /// Writes feature_dim() values into `out`.
  void encode(const Vec3& p, std::span<const double> params, std::span<double> out) const;

  /// Scatters d(loss)/d(feature) into the parameter gradient.
  void backward(const Vec3& p, std::span<const double> d_features,
                std::span<double> param_grad) const;

  /// d(loss)/d(p) given d(loss)/d(feature). Zero along axes where p was
  /// clamped to the box.
  Vec3 position_gradient(const Vec3& p, std::span<const double> params,
                         std::span<const double> d_features) const;

 private:
  HashGridConfig config_;
  std::vector<int> resolutions_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> entries_;
  std::vector<bool> dense_;
};

/// XOR of per-axis coordinates scaled by large primes.
std::uint32_t spatial_hash(std::uint32_t x, std::uint32_t y, std::uint32_t z);

}  // namespace dnf
