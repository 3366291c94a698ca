// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dnf/core/types.hpp"
#include "dnf/field/radiance_field.hpp"
#include "dnf/render/camera.hpp"
#include "dnf/render/composite.hpp"

namespace dnf {

struct RenderOptions {
  int samples_per_ray = 64;
  /// Seed of the stratified jitter. Ignored when `jitter` is false, in which
  /// case samples sit at stratum midpoints.
  std::uint64_t seed = 0;
  bool jitter = true;
  Vec3 background{1.0, 1.0, 1.0};
  /// Worker threads. Output does not depend on this value.
  int threads = 1;
  /// Normals are zeroed where accumulated opacity is at or below this.
  double normal_opacity_threshold = 0.1;
  bool compute_normals = true;
};

struct RenderOutput {
  Image color;    // H x W x 3
  Image depth;    // H x W x 1
  Image opacity;  // H x W x 1
  Image weights;  // H x W x S
  Image normals;  // H x W x 3, camera space

  int width() const { return color.width; }
  int height() const { return color.height; }
};

/// Per-sample values the backward pass needs.
struct RenderTape {
  Camera camera;
  RenderOptions options;
  std::vector<Vec3> directions;   // per pixel
  std::vector<RaySample> samples;  // per pixel x S, exterior samples have density 0
  std::vector<std::uint8_t> interior;
  Image raw_normals;  // normals before opacity masking
};

/// Upstream gradients on a RenderOutput. Empty images mean "no gradient".
struct RenderGrad {
  Image color;
  Image depth;
  Image opacity;
  Image weights;
  Image normals;

  static RenderGrad zeros_like(const RenderOutput& out);
};

/// Stratified ray parameters for one pixel. `pixel` salts the jitter so the
/// draw does not depend on iteration order.
void stratified_samples(double near, double far, int count, std::uint64_t seed,
                        std::uint64_t pixel, bool jitter, std::span<double> t_out,
                        std::span<double> delta_out);

RenderOutput render_view(const VolumeField& field, const Camera& camera,
                         const RenderOptions& options, RenderTape* tape = nullptr);

/// Accumulates d(loss)/d(field params) into `grad`.
void render_backward(const RadianceField& field, const RenderTape& tape,
                     const RenderOutput& output, const RenderGrad& upstream, FieldGradient& grad);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace dnf
