// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "dnf/core/types.hpp"

namespace dnf {

/// Guard for the normalized expected depth.
inline constexpr double kDepthEpsilon = 1e-6;

struct RaySample {
  double density = 0.0;
  Vec3 color;
  double t = 0.0;      // ray parameter of the sample
  double delta = 0.0;  // distance to the next sample (or the far bound)
};

struct CompositeResult {
  Vec3 color;
  double opacity = 0.0;
  double depth = 0.0;
  std::vector<double> weights;
};

/// Front-to-back alpha compositing with residual transmittance landing on
/// `background`. A pixel with no accumulated weight reports depth `far`.
CompositeResult composite_ray(std::span<const RaySample> samples, const Vec3& background,
                              double far);

/// In-place variant writing weights into a caller-owned span.
void composite_ray_into(std::span<const RaySample> samples, const Vec3& background, double far,
                        Vec3& color, double& opacity, double& depth, std::span<double> weights);

struct SampleGrad {
  double d_density = 0.0;
  Vec3 d_color;
};

/// Backward pass of composite_ray. `d_weights` (optional, may be empty) is
/// a direct upstream gradient on the per-sample weights.
void composite_ray_backward(std::span<const RaySample> samples, const Vec3& background,
                            std::span<const double> weights, double opacity, double depth,
                            const Vec3& d_color, double d_opacity, double d_depth,
                            std::span<const double> d_weights, std::span<SampleGrad> out);

}  // namespace dnf
