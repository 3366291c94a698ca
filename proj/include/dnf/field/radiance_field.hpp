// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dnf/core/types.hpp"
#include "dnf/field/hash_grid.hpp"
#include "dnf/field/mlp.hpp"

namespace dnf {

struct FieldSample {
  double density = 0.0;  // per unit length, >= 0
  Vec3 color;            // each channel in [0, 1]
};

/// Anything the renderer can march through: learned fields and the analytic
/// scenes used as ground truth.
class VolumeField {
 public:
  virtual ~VolumeField() = default;
  virtual FieldSample query(const Vec3& p) const = 0;
  /// True when query(p) is guaranteed to return zero density.
  virtual bool is_exterior(const Vec3& /*p*/) const { return false; }
};

struct MlpConfig {
  int hidden_layers = 2;
  int hidden_width = 64;
};

struct FieldConfig {
  HashGridConfig grid;
  MlpConfig mlp;
  double density_bias = -1.0;

  void validate() const;
  /// Flat `key = value` lines, read back by parse_field_config.
  std::string to_text() const;
};

FieldConfig parse_field_config(const std::string& text);

/// Parameter-shaped buffer for gradients of a RadianceField.
struct FieldGradient {
  std::vector<double> grid;
  std::vector<double> mlp;

  void zero();
  void add(const FieldGradient& other);
  double squared_norm() const;
  bool all_finite() const;
};

/// Hash-grid encoding followed by an MLP emitting raw (density, r, g, b).
/// Density goes through softplus(raw + bias), color through a sigmoid, and
/// points outside the bounding box have zero density.
class RadianceField final : public VolumeField {
 public:
  explicit RadianceField(FieldConfig config);
  RadianceField(FieldConfig config, std::uint64_t seed);

  const FieldConfig& config() const { return config_; }
  const HashGridEncoder& encoder() const { return encoder_; }
  const Mlp& mlp() const { return mlp_; }

  std::span<double> grid_params() { return grid_; }
  std::span<const double> grid_params() const { return grid_; }
  std::span<double> mlp_params() { return mlp_params_; }
  std::span<const double> mlp_params() const { return mlp_params_; }
  std::size_t param_count() const { return grid_.size() + mlp_params_.size(); }

  /// Grid entries uniform in +-1e-4, MLP He-uniform, all rounded to f32.
  void initialize(std::uint64_t seed);

  FieldGradient make_gradient() const;

  FieldSample query(const Vec3& p) const override;
  bool is_exterior(const Vec3& p) const override {
    return !config_.grid.bounding_box.contains(p);
  }
  void query_batch(std::span<const Vec3> points, std::span<FieldSample> out) const;

  /// Accumulates d(loss)/d(params) for one point given d(loss)/d(density)
  /// and d(loss)/d(color). The forward pass is recomputed internally.
  void backward(const Vec3& p, double d_density, const Vec3& d_color, FieldGradient& grad) const;

  /// Same as backward() but leaves the grid contribution as d(loss)/d(feature)
  /// in `d_features` so callers can scatter into the grid in a fixed order.
  void backward_mlp(const Vec3& p, double d_density, const Vec3& d_color,
                    std::span<double> mlp_grad, std::span<double> d_features) const;

  /// d(output)/d(p) chained with the given output gradients.
  Vec3 position_gradient(const Vec3& p, double d_density, const Vec3& d_color) const;

  bool operator==(const RadianceField& other) const;

 private:
  void raw_forward(const Vec3& p, std::span<double> features, std::span<double> raw,
                   std::span<double> scratch) const;
  void output_grad(std::span<const double> raw, double d_density, const Vec3& d_color,
                   bool inside, std::span<double> d_raw) const;

  FieldConfig config_;
  HashGridEncoder encoder_;
  Mlp mlp_;
  std::vector<double> grid_;
  std::vector<double> mlp_params_;
};

double softplus(double x);
double sigmoid(double x);

}  // namespace dnf
