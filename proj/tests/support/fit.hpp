// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Direct 3D regression of a radiance field onto an analytic field. Used to
// build trained-looking fields without running the optimization pipeline.

#include <cmath>
#include <random>

#include "dnf/pipeline/optimizer.hpp"
#include "dnf/pipeline/scene.hpp"

namespace dnf::testing {

/// Minimizes mean (log1p(sigma) - log1p(sigma*))^2 + inside * |c - c*|^2
/// over uniform points in the field's bounding box.
inline void fit_to_field(RadianceField& field, const VolumeField& target, int steps,
                         int points_per_step, std::uint64_t seed) {
  FieldOptimizer opt(field, AdamConfig{});
  std::mt19937_64 rng(seed);
  const Aabb box = field.config().grid.bounding_box;
  std::uniform_real_distribution<double> ux(box.lo.x, box.hi.x);
  std::uniform_real_distribution<double> uy(box.lo.y, box.hi.y);
  std::uniform_real_distribution<double> uz(box.lo.z, box.hi.z);
  const double inv = 1.0 / points_per_step;
  for (int s = 0; s < steps; ++s) {
    FieldGradient grad = field.make_gradient();
    for (int i = 0; i < points_per_step; ++i) {
      const Vec3 p{ux(rng), uy(rng), uz(rng)};
      const FieldSample want = target.query(p);
      const FieldSample got = field.query(p);
      const double r = std::log1p(got.density) - std::log1p(want.density);
      const double d_density = 2.0 * r / (1.0 + got.density) * inv;
      Vec3 d_color{};
      if (want.density > 0.0) d_color = (got.color - want.color) * (2.0 * inv);
      field.backward(p, d_density, d_color, grad);
    }
    opt.step(field, grad);
  }
}

}  // namespace dnf::testing
