// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/diffusion/sds.hpp"

#include <stdexcept>

namespace dnf {

Image sds_grad(const Image& x0, int t, const Image& eps, const Image& eps_pred,
               const NoiseSchedule& schedule) {
  if (!x0.same_shape(eps) || !x0.same_shape(eps_pred)) {
    throw std::invalid_argument("sds_grad: shape mismatch");
  }
  schedule.check_timestep(t);
  const double w = schedule.weight[static_cast<std::size_t>(t)];
  Image g = eps;
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = w * (eps_pred.data[i] - eps.data[i]);
  return g;
}

DistillResult distill(GuidanceOracle& oracle, const Image& render, const Conditioning& cond,
                      const NoiseSchedule& schedule, std::mt19937_64& rng, bool use_adapter) {
  DistillResult r;
  const Image z0 = oracle.encode(render);
  r.t = sample_timestep(schedule.num_steps(), rng);
  const Image eps = gaussian_like(z0, rng);
  const Image z_t = forward_diffuse(z0, r.t, eps, schedule);
  const Image eps_pred = use_adapter ? oracle.predict_eps_adapted(z_t, r.t, cond)
                                     : oracle.predict_eps(z_t, r.t, cond);
  if (!eps_pred.same_shape(z_t)) {
    throw OracleError("oracle returned shape " + eps_pred.shape_string() + " for input " +
                      z_t.shape_string());
  }
  Image g = sds_grad(z0, r.t, eps, eps_pred, schedule);
  const double w = schedule.weight[static_cast<std::size_t>(r.t)];
  double sq = 0.0;
  for (std::size_t i = 0; i < eps.data.size(); ++i) {
    const double d = eps_pred.data[i] - eps.data[i];
    sq += d * d;
  }
  r.loss = eps.data.empty() ? 0.0 : w * sq / static_cast<double>(eps.data.size());

  if (oracle.identity_codec()) {
    r.pixel_grad = std::move(g);
  } else {
    Image shifted = z0;
    for (std::size_t i = 0; i < shifted.data.size(); ++i) shifted.data[i] -= g.data[i];
    const Image a = oracle.decode(z0);
    const Image b = oracle.decode(shifted);
    if (!a.same_shape(render) || !b.same_shape(render)) {
      throw OracleError("oracle decode returned shape " + a.shape_string() + ", expected " +
                        render.shape_string());
    }
    r.pixel_grad = a;
    for (std::size_t i = 0; i < a.data.size(); ++i) r.pixel_grad.data[i] = a.data[i] - b.data[i];
  }
  return r;
}

}  // namespace dnf
