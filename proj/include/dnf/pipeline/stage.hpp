// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>

#include "dnf/diffusion/oracle.hpp"
#include "dnf/diffusion/schedule.hpp"
#include "dnf/field/radiance_field.hpp"
#include "dnf/losses/losses.hpp"
#include "dnf/pipeline/optimizer.hpp"
#include "dnf/render/camera.hpp"

namespace dnf {

enum class LossKind { kSds3d, kSds2d, kRec, kDepth, kNormal, kOpacityReg };

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);
/// Whitespace- or comma-separated loss names.
std::set<LossKind> parse_loss_set(const std::string& text);
std::string to_string(const std::set<LossKind>& losses);

/// Angles in radians. A draw returns the reference camera with probability
/// `reference_fraction`; otherwise an orbit pose uniform in the ranges.
struct CameraPolicy {
  double reference_fraction = 0.25;
  double radius_min = 1.5;
  double radius_max = 2.2;
  double polar_min = kPi / 3.0;
  double polar_max = 2.0 * kPi / 3.0;
  double azimuth_min = 0.0;
  double azimuth_max = 2.0 * kPi;

  void validate() const;
};

struct SampledCamera {
  Camera camera;
  bool reference = false;
};

/// Orbit cameras share the reference camera's field of view and depth
/// bounds policy; `resolution` sets their size.
SampledCamera sample_camera(const CameraPolicy& policy, const Camera& reference, int resolution,
                            double scene_radius, std::mt19937_64& rng);

struct StagePlan {
  int iterations = 300;
  std::set<LossKind> losses;
  LossWeights weights;
  CameraPolicy cameras;
  int resolution = 64;
  int samples_per_ray = 32;
  /// Adapter update period in iterations (0 = never).
  int adapt_every = 0;
  /// Opacity binarization level for the largest-component test.
  double reg_threshold = 0.5;
  /// Composite each render over a uniformly random gray instead of the
  /// context background, so semi-transparent fog cannot hide by matching it.
  bool random_background = false;
  AdamConfig adam;

  bool enabled(LossKind k) const { return losses.count(k) != 0; }
  void validate() const;
};

StagePlan default_stage1_plan();
StagePlan default_stage2_plan();

/// Settings shared by every step of a run.
struct StepContext {
  const NoiseSchedule* schedule = nullptr;
  int threads = 1;
  Vec3 background{1.0, 1.0, 1.0};
  double scene_radius = 1.0;
  std::string prompt;
  double guidance_scale = 1.0;
  /// Distill through the adapted prediction instead of the frozen one.
  bool guide_with_adapter = false;
};

/// One iteration's bookkeeping. `losses` has one key per enabled loss; the
/// value is empty on iterations where that loss did not apply (reference
/// losses on orbit draws).
struct StepRecord {
  int stage = 0;
  int iteration = 0;        // 1-based within the stage
  int global_iteration = 0;  // 1-based across stages
  std::map<std::string, std::optional<double>> losses;
  std::optional<double> adapt_loss;
  int timestep = 0;
  bool reference_view = false;
  double grad_norm = 0.0;
  double seconds = 0.0;  // wall clock since the stage started
  std::optional<double> heldout_psnr;
  std::optional<double> heldout_iou;

  std::string to_json() const;
};

/// Geometry step: SDS against the view-conditioned oracle on every draw;
/// reconstruction, depth and normal losses on reference draws. One Adam
/// update. `iteration` is 1-based within the stage.
StepRecord stage1_step(RadianceField& field, const ReferenceBundle& ref, GuidanceOracle& oracle,
                       const StagePlan& plan, FieldOptimizer& optimizer, std::mt19937_64& rng,
                       const StepContext& ctx, int iteration);

/// Texture step: SDS against the text-conditioned oracle plus opacity
/// regularization, one Adam update, then an adapter update every
/// `plan.adapt_every` iterations with the field held fixed. `ref` is used
/// only when reference losses are enabled or the policy draws it.
StepRecord stage2_step(RadianceField& field, const ReferenceBundle* ref, GuidanceOracle& oracle,
                       const StagePlan& plan, FieldOptimizer& optimizer, std::mt19937_64& rng,
                       const StepContext& ctx, int iteration);

}  // namespace dnf
