// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dnf/diffusion/schedule.hpp"
#include "dnf/field/radiance_field.hpp"
#include "dnf/losses/losses.hpp"
#include "dnf/pipeline/config.hpp"
#include "dnf/pipeline/mesh.hpp"
#include "dnf/pipeline/oracles.hpp"
#include "dnf/pipeline/stage.hpp"

namespace dnf {

/// Independent 64-bit seed for `stream` derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

NoiseSchedule make_run_schedule(const OracleConfig& oracle);

/// Rendered from the analytic scene, or read from the configured files
/// (PNG image and mask, DNFD raster or PNG depth).
ReferenceBundle load_reference(const RunConfig& config);

/// Evenly spaced azimuths offset by half a step from the reference, at the
/// reference radius and polar angle.
std::vector<Camera> heldout_cameras(const InputsConfig& inputs, int count, int resolution);

/// `count` orbit views at the reference elevation starting at the reference.
std::vector<Camera> turntable_cameras(const InputsConfig& inputs, int count, int resolution);

struct EvalReport {
  double psnr = 0.0;        // mean over held-out views, textured ground truth
  double iou = 0.0;         // mean silhouette IoU over held-out views
  double depth_corr = 0.0;  // mean Pearson correlation on ground-truth foreground
  std::optional<double> hausdorff;  // mesh vs analytic surface, when requested
  double off_component_opacity = 0.0;

  std::string to_json() const;
};

struct EvalOptions {
  int views = 4;
  int resolution = 64;
  int samples_per_ray = 32;
  int threads = 1;
  /// Mesh lattice resolution for the Hausdorff distance (0 = skip).
  int mesh_resolution = 0;
};

/// Scores a field against the analytic scene. Throws ConfigError for scenes
/// without ground truth.
EvalReport evaluate(const VolumeField& field, const RunConfig& config, const EvalOptions& options);

/// Density threshold used for mesh export at the run's sampling density.
double run_iso_level(const RunConfig& config);

struct RunResult {
  RadianceField field;
  std::vector<StepRecord> records;
  std::optional<EvalReport> after_stage1;
  std::optional<EvalReport> after_stage2;
  double seconds = 0.0;
};

struct RunHooks {
  /// Called after every step, before the record is written.
  std::function<void(const StepRecord&, const RadianceField&)> on_step;
  /// Called between the stages with the stage-1 field.
  std::function<void(const RadianceField&)> after_stage1;
};

/// Runs geometry then texture optimization. When `config.output.dir` is
/// set, writes stage1.dnf, stage2.dnf, metrics.jsonl, contact sheets and an
/// optional mesh there. A non-finite loss or gradient saves last_good.dnf
/// (the field before the failing step) and rethrows NumericalError.
/// `oracles` overrides the configured guidance when non-null.
RunResult run_pipeline(const RunConfig& config, OracleSet* oracles = nullptr,
                       const RunHooks& hooks = {});

}  // namespace dnf
