// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/render/composite.hpp"

#include <algorithm>
#include <cmath>

namespace dnf {

void composite_ray_into(std::span<const RaySample> samples, const Vec3& background, double far,
                        Vec3& color, double& opacity, double& depth, std::span<double> weights) {
  double transmittance = 1.0;
  double opacity_sum = 0.0;
  double depth_sum = 0.0;
  Vec3 color_sum;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RaySample& s = samples[i];
    const double optical = s.density * s.delta;
    const double survive = optical > 0.0 ? std::exp(-optical) : 1.0;
    const double w = (1.0 - survive) * transmittance;
    weights[i] = w;
    color_sum += s.color * w;
    opacity_sum += w;
    depth_sum += w * s.t;
    transmittance *= survive;
  }
  opacity = opacity_sum;
  color = color_sum + background * (1.0 - opacity_sum);
  depth = opacity_sum > 0.0 ? depth_sum / std::max(opacity_sum, kDepthEpsilon) : far;
}

CompositeResult composite_ray(std::span<const RaySample> samples, const Vec3& background,
                              double far) {
  CompositeResult r;
  r.weights.assign(samples.size(), 0.0);
  composite_ray_into(samples, background, far, r.color, r.opacity, r.depth, r.weights);
  return r;
}

void composite_ray_backward(std::span<const RaySample> samples, const Vec3& background,
                            std::span<const double> weights, double opacity, double depth,
                            const Vec3& d_color, double d_opacity, double d_depth,
                            std::span<const double> d_weights, std::span<SampleGrad> out) {
  const std::size_t n = samples.size();
  const double safe_opacity = std::max(opacity, kDepthEpsilon);
  // Total upstream gradient on each weight, pre-multiplied by the weight.
  auto weight_grad = [&](std::size_t k) {
    double g = dot(d_color, samples[k].color - background) + d_opacity;
    if (opacity > kDepthEpsilon) {
      g += d_depth * (samples[k].t - depth) / opacity;
    } else if (opacity > 0.0) {
      g += d_depth * samples[k].t / safe_opacity;
    }
    if (!d_weights.empty()) g += d_weights[k];
    return g;
  };

  // Transmittance after each sample, front to back.
  double transmittance = 1.0;
  std::vector<double> after(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double optical = samples[i].density * samples[i].delta;
    transmittance *= optical > 0.0 ? std::exp(-optical) : 1.0;
    after[i] = transmittance;
  }

  double suffix = 0.0;  // sum over k > i of g_k * w_k
  for (std::size_t i = n; i-- > 0;) {
    const double g = weight_grad(i);
    const double d_optical = g * after[i] - suffix;
    out[i].d_density = d_optical * samples[i].delta;
    out[i].d_color = d_color * weights[i];
    suffix += g * weights[i];
  }
}

}  // namespace dnf
