// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "dnf/core/types.hpp"

namespace dnf {

enum class ScheduleProfile { kLinearBeta, kCosine };
enum class TimestepWeighting { kSigmaSquared, kUnit, kSigmaAlpha };

ScheduleProfile parse_schedule_profile(const std::string& name);
TimestepWeighting parse_timestep_weighting(const std::string& name);
std::string to_string(ScheduleProfile profile);
std::string to_string(TimestepWeighting weighting);

/// Variance-preserving forward-diffusion coefficients indexed by timestep.
struct NoiseSchedule {
  std::vector<double> alpha;
  std::vector<double> sigma;
  std::vector<double> weight;
  ScheduleProfile profile = ScheduleProfile::kLinearBeta;

  int num_steps() const { return static_cast<int>(alpha.size()); }
  void check_timestep(int t) const;
};

struct LinearBetaRange {
  double start = 8.5e-4;
  double end = 1.2e-2;
};

NoiseSchedule build_schedule(int num_steps, ScheduleProfile profile,
                             TimestepWeighting weighting = TimestepWeighting::kSigmaSquared,
                             LinearBetaRange betas = {});

/// Convenience overload taking the profile by name; throws ConfigError on an
/// unknown profile.
NoiseSchedule build_schedule(int num_steps, const std::string& profile,
                             TimestepWeighting weighting = TimestepWeighting::kSigmaSquared);

inline constexpr double kTimestepLow = 0.02;
inline constexpr double kTimestepHigh = 0.98;

/// t = round(u * num_steps) with u ~ U(0.02, 0.98).
int sample_timestep(int num_steps, std::mt19937_64& rng);

/// x_t = alpha_t * x0 + sigma_t * eps.
Image forward_diffuse(const Image& x0, int t, const Image& eps, const NoiseSchedule& schedule);

/// Standard-normal image with the given shape.
Image gaussian_like(const Image& shape, std::mt19937_64& rng);

}  // namespace dnf
