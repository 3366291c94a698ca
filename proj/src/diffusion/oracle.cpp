// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/diffusion/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dnf {

double GuidanceOracle::adapt(const std::vector<AdaptSample>& /*batch*/) {
  throw OracleError("oracle is not adaptable");
}

AffineAdapter::AffineAdapter(int channels, double learning_rate)
    : channels_(channels),
      lr_(learning_rate),
      params_(2 * static_cast<std::size_t>(channels), 0.0),
      m_(params_.size(), 0.0),
      v_(params_.size(), 0.0) {}

Image AffineAdapter::apply(const Image& base) const {
  if (base.channels != channels_) throw std::invalid_argument("adapter: channel mismatch");
  Image out = base;
  const auto c = static_cast<std::size_t>(channels_);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const std::size_t ch = i % c;
    out.data[i] = base.data[i] + params_[ch] * base.data[i] + params_[c + ch];
  }
  return out;
}

double AffineAdapter::step(const std::vector<Image>& base, const std::vector<AdaptSample>& batch) {
  const auto c = static_cast<std::size_t>(channels_);
  std::vector<double> grad(params_.size(), 0.0);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Image& pred = base[b];
    const Image& eps = batch[b].eps;
    const double scale = batch[b].weight / static_cast<double>(pred.data.size() * batch.size());
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
      const std::size_t ch = i % c;
      const double e = pred.data[i] + params_[ch] * pred.data[i] + params_[c + ch] - eps.data[i];
      loss += scale * e * e;
      grad[ch] += scale * 2.0 * e * pred.data[i];
      grad[c + ch] += scale * 2.0 * e;
    }
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.99;
  constexpr double kEps = 1e-15;
  ++steps_;
  const double corr1 = 1.0 - std::pow(kBeta1, steps_);
  const double corr2 = 1.0 - std::pow(kBeta2, steps_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
    params_[i] -= lr_ * (m_[i] / corr1) / (std::sqrt(v_[i] / corr2) + kEps);
  }
  return loss;
}

std::vector<double> AffineAdapter::parameters() const { return params_; }

bool AffineAdapter::is_zero() const {
  return std::all_of(params_.begin(), params_.end(), [](double p) { return p == 0.0; });
}

TargetImageOracle::TargetImageOracle(TargetFn target, NoiseSchedule schedule,
                                     OracleCapabilities caps, double adapter_lr)
    : target_fn_(std::move(target)),
      schedule_(std::move(schedule)),
      caps_(caps),
      adapter_(3, adapter_lr) {}

const Image& TargetImageOracle::target(const Conditioning& cond) {
  for (const CacheEntry& e : cache_) {
    if (e.camera == cond.camera && e.background == cond.background) return e.image;
  }
  constexpr std::size_t kCacheSize = 8;
  if (cache_.size() >= kCacheSize) cache_.erase(cache_.begin());
  cache_.push_back({cond.camera, cond.background, target_fn_(cond)});
  return cache_.back().image;
}

Image TargetImageOracle::predict_eps(const Image& x_t, int t, const Conditioning& cond) {
  schedule_.check_timestep(t);
  const double a = schedule_.alpha[static_cast<std::size_t>(t)];
  const double s = schedule_.sigma[static_cast<std::size_t>(t)];
  if (!(s > 0.0)) throw OracleError("target oracle: sigma_t is zero at t = " + std::to_string(t));
  const Image& x = target(cond);
  if (!x.same_shape(x_t)) {
    throw OracleError("target oracle: target shape " + x.shape_string() +
                      " does not match input " + x_t.shape_string());
  }
  Image eps = x_t;
  for (std::size_t i = 0; i < eps.data.size(); ++i) eps.data[i] = (x_t.data[i] - a * x.data[i]) / s;
  return eps;
}

Image TargetImageOracle::predict_eps_adapted(const Image& x_t, int t, const Conditioning& cond) {
  Image base = predict_eps(x_t, t, cond);
  return caps_.adaptable ? adapter_.apply(base) : base;
}

double TargetImageOracle::adapt(const std::vector<AdaptSample>& batch) {
  if (!caps_.adaptable) throw OracleError("target oracle: adaptation requested but not adaptable");
  if (batch.empty()) throw std::invalid_argument("adapt: empty batch");
  std::vector<Image> base;
  base.reserve(batch.size());
  for (const AdaptSample& s : batch) base.push_back(predict_eps(s.x_t, s.t, s.conditioning));
  return adapter_.step(base, batch);
}

std::vector<double> TargetImageOracle::adapter_parameters() const {
  return caps_.adaptable ? adapter_.parameters() : std::vector<double>{};
}

double adapt_oracle(GuidanceOracle& oracle, const std::vector<Image>& renders,
                    const std::vector<Conditioning>& conditions, const NoiseSchedule& schedule,
                    std::mt19937_64& rng) {
  if (!oracle.capabilities().adaptable) throw OracleError("adapt_oracle: oracle is not adaptable");
  if (renders.empty()) throw std::invalid_argument("adapt_oracle: empty render batch");
  if (renders.size() != conditions.size()) {
    throw std::invalid_argument("adapt_oracle: renders and conditions differ in length");
  }
  std::vector<AdaptSample> batch;
  batch.reserve(renders.size());
  for (std::size_t i = 0; i < renders.size(); ++i) {
    AdaptSample s;
    const Image z0 = oracle.encode(renders[i]);
    s.t = sample_timestep(schedule.num_steps(), rng);
    s.eps = gaussian_like(z0, rng);
    s.x_t = forward_diffuse(z0, s.t, s.eps, schedule);
    s.weight = schedule.weight[static_cast<std::size_t>(s.t)];
    s.conditioning = conditions[i];
    batch.push_back(std::move(s));
  }
  return oracle.adapt(batch);
}

}  // namespace dnf
