// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "dnf/core/types.hpp"
#include "dnf/diffusion/oracle.hpp"
#include "dnf/diffusion/schedule.hpp"

namespace dnf {

/// w(t) * (eps_pred - eps). The denoiser Jacobian is deliberately absent.
Image sds_grad(const Image& x0, int t, const Image& eps, const Image& eps_pred,
               const NoiseSchedule& schedule);

struct DistillResult {
  Image pixel_grad;  // d(pseudo-loss)/d(render), same shape as the render
  double loss = 0.0;  // w(t) * mean (eps_pred - eps)^2, for logging
  int t = 0;
};

/// One score-distillation draw for a rendered RGB image. For identity codecs
/// the latent gradient is the pixel gradient; otherwise it is pulled back
/// as decode(z0) - decode(z0 - g).
DistillResult distill(GuidanceOracle& oracle, const Image& render, const Conditioning& cond,
                      const NoiseSchedule& schedule, std::mt19937_64& rng,
                      bool use_adapter = false);

}  // namespace dnf
