// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "dnf/field/radiance_field.hpp"

namespace dnf {

struct AdamConfig {
  double lr_grid = 1e-2;
  double lr_mlp = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-15;

  void validate() const;
};

/// Adam over both parameter groups of a RadianceField. Updated parameters
/// are rounded to f32 so checkpoints reproduce them exactly.
class FieldOptimizer {
 public:
  FieldOptimizer(const RadianceField& field, AdamConfig config);

  void step(RadianceField& field, const FieldGradient& grad);

  int steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_grid_, v_grid_, m_mlp_, v_mlp_;
  int steps_ = 0;
};

}  // namespace dnf
