// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/pipeline/oracles.hpp"

#include <limits>

#include "dnf/diffusion/remote.hpp"
#include "dnf/pipeline/scene.hpp"

namespace dnf {

std::unique_ptr<TargetImageOracle> make_scene_oracle(const SceneSpec& spec, bool textured,
                                                     const NoiseSchedule& schedule,
                                                     OracleCapabilities caps, int samples_per_ray,
                                                     double adapter_lr) {
  auto scene = std::make_shared<AnalyticScene>(spec, textured);
  auto target = [scene, samples_per_ray](const Conditioning& cond) {
    if (!cond.camera) throw OracleError("scene oracle needs a camera in the conditioning");
    RenderOptions opts;
    opts.samples_per_ray = samples_per_ray;
    opts.jitter = false;
    opts.compute_normals = false;
    if (cond.background) opts.background = *cond.background;
    return render_view(*scene, *cond.camera, opts).color;
  };
  return std::make_unique<TargetImageOracle>(target, schedule, caps, adapter_lr);
}

HostileOracle::HostileOracle(std::unique_ptr<GuidanceOracle> inner, std::shared_ptr<int> counter,
                             int healthy_calls)
    : inner_(std::move(inner)), counter_(std::move(counter)), healthy_calls_(healthy_calls) {}

Image HostileOracle::poison(Image eps) {
  if (++*counter_ > healthy_calls_) {
    for (double& v : eps.data) v = std::numeric_limits<double>::quiet_NaN();
  }
  return eps;
}

Image HostileOracle::predict_eps(const Image& x_t, int t, const Conditioning& cond) {
  return poison(inner_->predict_eps(x_t, t, cond));
}

Image HostileOracle::predict_eps_adapted(const Image& x_t, int t, const Conditioning& cond) {
  return poison(inner_->predict_eps_adapted(x_t, t, cond));
}

namespace {

void check_remote_schedule(const RemoteOracle& oracle, const std::string& role,
                           const NoiseSchedule& schedule) {
  const HandshakeInfo& info = oracle.handshake();
  if (!info.schedule.empty() && info.schedule != to_string(schedule.profile)) {
    throw OracleError(role + " oracle uses schedule '" + info.schedule + "', run uses '" +
                      to_string(schedule.profile) + "'");
  }
  if (info.num_steps != 0 && info.num_steps != schedule.num_steps()) {
    throw OracleError(role + " oracle has " + std::to_string(info.num_steps) +
                      " timesteps, run uses " + std::to_string(schedule.num_steps()));
  }
}

}  // namespace

OracleSet make_oracles(const RunConfig& config, const NoiseSchedule& schedule) {
  OracleSet set;
  const OracleConfig& oc = config.oracle;
  if (oc.kind == OracleKind::kRemote) {
    const SphericalPose ref = config.inputs.reference_pose;
    auto geometry = std::make_unique<RemoteOracle>(oc.url, "geometry", ref, config.stage1.resolution,
                                                   config.stage1.resolution, oc.timeout_seconds);
    check_remote_schedule(*geometry, "geometry", schedule);
    auto texture = std::make_unique<RemoteOracle>(oc.url, "texture", ref, config.stage2.resolution,
                                                  config.stage2.resolution, oc.timeout_seconds);
    check_remote_schedule(*texture, "texture", schedule);
    set.geometry = std::move(geometry);
    set.texture = std::move(texture);
    return set;
  }
  const SceneSpec& spec = config.inputs.scene;
  set.geometry = make_scene_oracle(spec, true, schedule, {.view_conditioned = true},
                                   config.stage1.samples_per_ray, oc.adapter_lr);
  set.texture = make_scene_oracle(spec, true, schedule,
                                  {.text_conditioned = true, .adaptable = true},
                                  config.stage2.samples_per_ray, oc.adapter_lr);
  if (oc.kind == OracleKind::kHostile) {
    auto counter = std::make_shared<int>(0);
    set.geometry = std::make_unique<HostileOracle>(std::move(set.geometry), counter, oc.hostile_after);
    set.texture = std::make_unique<HostileOracle>(std::move(set.texture), counter, oc.hostile_after);
  }
  return set;
}

}  // namespace dnf
