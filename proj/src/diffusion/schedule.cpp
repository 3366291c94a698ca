// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dnf {

ScheduleProfile parse_schedule_profile(const std::string& name) {
  if (name == "linear-beta") return ScheduleProfile::kLinearBeta;
  if (name == "cosine") return ScheduleProfile::kCosine;
  throw ConfigError("unknown schedule profile '" + name + "' (expected linear-beta or cosine)");
}

TimestepWeighting parse_timestep_weighting(const std::string& name) {
  if (name == "sigma2") return TimestepWeighting::kSigmaSquared;
  if (name == "unit") return TimestepWeighting::kUnit;
  if (name == "sigma-alpha") return TimestepWeighting::kSigmaAlpha;
  throw ConfigError("unknown timestep weighting '" + name +
                    "' (expected sigma2, unit or sigma-alpha)");
}

std::string to_string(ScheduleProfile profile) {
  return profile == ScheduleProfile::kCosine ? "cosine" : "linear-beta";
}

std::string to_string(TimestepWeighting weighting) {
  switch (weighting) {
    case TimestepWeighting::kUnit:
      return "unit";
    case TimestepWeighting::kSigmaAlpha:
      return "sigma-alpha";
    case TimestepWeighting::kSigmaSquared:
      break;
  }
  return "sigma2";
}

void NoiseSchedule::check_timestep(int t) const {
  if (t < 0 || t >= num_steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [0, " +
                            std::to_string(num_steps()) + ")");
  }
}

NoiseSchedule build_schedule(int num_steps, ScheduleProfile profile, TimestepWeighting weighting,
                             LinearBetaRange betas) {
  if (num_steps < 2) throw ConfigError("schedule: num_steps must be >= 2");
  std::vector<double> beta(static_cast<std::size_t>(num_steps));
  if (profile == ScheduleProfile::kLinearBeta) {
    for (int i = 0; i < num_steps; ++i) {
      beta[static_cast<std::size_t>(i)] =
          betas.start + (betas.end - betas.start) * i / (num_steps - 1);
    }
  } else {
    constexpr double kOffset = 0.008;
    auto f = [&](double step) {
      const double c = std::cos((step / num_steps + kOffset) / (1.0 + kOffset) * kPi / 2.0);
      return c * c;
    };
    for (int i = 0; i < num_steps; ++i) {
      beta[static_cast<std::size_t>(i)] = std::min(1.0 - f(i + 1.0) / f(i), 0.999);
    }
  }

  NoiseSchedule s;
  s.profile = profile;
  s.alpha.resize(beta.size());
  s.sigma.resize(beta.size());
  s.weight.resize(beta.size());
  double alpha_bar = 1.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    alpha_bar *= 1.0 - beta[i];
    s.alpha[i] = std::sqrt(alpha_bar);
    s.sigma[i] = std::sqrt(1.0 - alpha_bar);
    switch (weighting) {
      case TimestepWeighting::kSigmaSquared:
        s.weight[i] = 1.0 - alpha_bar;
        break;
      case TimestepWeighting::kUnit:
        s.weight[i] = 1.0;
        break;
      case TimestepWeighting::kSigmaAlpha:
        s.weight[i] = s.sigma[i] * s.alpha[i];
        break;
    }
  }
  return s;
}

NoiseSchedule build_schedule(int num_steps, const std::string& profile,
                             TimestepWeighting weighting) {
  return build_schedule(num_steps, parse_schedule_profile(profile), weighting);
}

int sample_timestep(int num_steps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(kTimestepLow, kTimestepHigh);
  const int t = static_cast<int>(std::lround(u(rng) * num_steps));
  return std::clamp(t, 0, num_steps - 1);
}

Image forward_diffuse(const Image& x0, int t, const Image& eps, const NoiseSchedule& schedule) {
  if (!x0.same_shape(eps)) {
    throw std::invalid_argument("forward_diffuse: shape mismatch " + x0.shape_string() + " vs " +
                                eps.shape_string());
  }
  schedule.check_timestep(t);
  const double a = schedule.alpha[static_cast<std::size_t>(t)];
  const double s = schedule.sigma[static_cast<std::size_t>(t)];
  Image out = x0;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * x0.data[i] + s * eps.data[i];
  return out;
}

Image gaussian_like(const Image& shape, std::mt19937_64& rng) {
  Image out(shape.width, shape.height, shape.channels);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : out.data) v = n(rng);
  return out;
}

}  // namespace dnf
