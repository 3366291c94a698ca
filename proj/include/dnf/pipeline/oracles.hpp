// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "dnf/diffusion/oracle.hpp"
#include "dnf/pipeline/config.hpp"

namespace dnf {

/// Guidance for the two stages: a view-conditioned geometry oracle and a
/// text-conditioned texture oracle.
struct OracleSet {
  std::unique_ptr<GuidanceOracle> geometry;
  std::unique_ptr<GuidanceOracle> texture;
};

/// Synthetic oracle whose target is an unjittered render of the analytic
/// scene at the conditioning camera. Requests without a camera raise
/// OracleError.
std::unique_ptr<TargetImageOracle> make_scene_oracle(const SceneSpec& spec, bool textured,
                                                     const NoiseSchedule& schedule,
                                                     OracleCapabilities caps, int samples_per_ray,
                                                     double adapter_lr);

/// Forwards to an inner oracle, then returns NaN predictions once the shared
/// counter has passed `healthy_calls`. Used to exercise divergence handling.
class HostileOracle final : public GuidanceOracle {
 public:
  HostileOracle(std::unique_ptr<GuidanceOracle> inner, std::shared_ptr<int> counter,
                int healthy_calls);

  OracleCapabilities capabilities() const override { return inner_->capabilities(); }
  Image predict_eps(const Image& x_t, int t, const Conditioning& cond) override;
  Image predict_eps_adapted(const Image& x_t, int t, const Conditioning& cond) override;
  double adapt(const std::vector<AdaptSample>& batch) override { return inner_->adapt(batch); }

 private:
  Image poison(Image eps);

  std::unique_ptr<GuidanceOracle> inner_;
  std::shared_ptr<int> counter_;
  int healthy_calls_;
};

/// Builds both oracles from the run configuration. Remote oracles are
/// contacted immediately; a schedule that disagrees with the local one
/// raises OracleError.
OracleSet make_oracles(const RunConfig& config, const NoiseSchedule& schedule);

}  // namespace dnf
