// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/pipeline/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace dnf {

void AdamConfig::validate() const {
  if (!(lr_grid > 0.0) || !(lr_mlp > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
}

FieldOptimizer::FieldOptimizer(const RadianceField& field, AdamConfig config)
    : config_(config),
      m_grid_(field.grid_params().size(), 0.0),
      v_grid_(field.grid_params().size(), 0.0),
      m_mlp_(field.mlp_params().size(), 0.0),
      v_mlp_(field.mlp_params().size(), 0.0) {
  config_.validate();
}

namespace {

void adam_update(std::span<double> params, std::span<const double> grad, std::vector<double>& m,
                 std::vector<double>& v, double lr, const AdamConfig& c, int step) {
  if (grad.size() != params.size()) throw std::invalid_argument("Adam: gradient size mismatch");
  const double bc1 = 1.0 - std::pow(c.beta1, step);
  const double bc2 = 1.0 - std::pow(c.beta2, step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] = to_f32(params[i] - lr * m_hat / (std::sqrt(v_hat) + c.epsilon));
  }
}

}  // namespace

void FieldOptimizer::step(RadianceField& field, const FieldGradient& grad) {
  ++steps_;
  adam_update(field.grid_params(), grad.grid, m_grid_, v_grid_, config_.lr_grid, config_, steps_);
  adam_update(field.mlp_params(), grad.mlp, m_mlp_, v_mlp_, config_.lr_mlp, config_, steps_);
}

}  // namespace dnf
