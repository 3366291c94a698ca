// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dnf/diffusion/schedule.hpp"
#include "dnf/field/radiance_field.hpp"
#include "dnf/pipeline/scene.hpp"
#include "dnf/pipeline/stage.hpp"
#include "dnf/render/camera.hpp"

namespace dnf {

struct InputsConfig {
  SceneSpec scene;
  SphericalPose reference_pose;
  double fov_y = kPi / 4.0;
  int resolution = 64;
  /// Half-extent of the ray interval around the origin: cameras at radius
  /// r sample t in [r - scene_radius, r + scene_radius].
  double scene_radius = 1.0;

  Camera reference_camera() const;
};

enum class OracleKind { kSynthetic, kRemote, kHostile };

OracleKind parse_oracle_kind(const std::string& name);
std::string to_string(OracleKind kind);

struct OracleConfig {
  OracleKind kind = OracleKind::kSynthetic;
  std::string url;
  ScheduleProfile profile = ScheduleProfile::kLinearBeta;
  int num_steps = 1000;
  TimestepWeighting weighting = TimestepWeighting::kSigmaSquared;
  double guidance_scale = 7.5;
  std::string prompt;
  double adapter_lr = 1e-2;
  bool guide_with_adapter = false;
  /// Hostile oracles answer this many predictions before returning NaN.
  int hostile_after = 0;
  double timeout_seconds = 60.0;
};

struct OutputConfig {
  std::filesystem::path dir;
  /// Held-out evaluation period in iterations (0 = never); needs a scene
  /// with ground truth.
  int eval_every = 50;
  int eval_views = 4;
  int contact_views = 8;
  /// Lattice resolution of the exported mesh (0 = no mesh).
  int mesh_resolution = 0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  InputsConfig inputs;
  FieldConfig field;
  StagePlan stage1 = default_stage1_plan();
  StagePlan stage2 = default_stage2_plan();
  OracleConfig oracle;
  OutputConfig output;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// INI text that parse_run_config() reads back to an equal config.
  std::string to_text() const;
};

/// Small field and 64x64 renders with 32 samples per ray: a full two-stage
/// run finishes in minutes on one CPU core.
RunConfig desk_scale_config(SceneKind kind = SceneKind::kTexturedSphere);

/// Parses INI text. Relative input paths resolve against `base_dir`.
/// Unknown keys and unparsable values raise ConfigError naming the key;
/// so do missing required keys (inputs.scene and output.dir).
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies the DNF_ORACLE_URL environment override, if set.
void apply_environment(RunConfig& config);

}  // namespace dnf
