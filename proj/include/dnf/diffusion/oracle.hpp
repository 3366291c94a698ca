// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dnf/core/types.hpp"
#include "dnf/diffusion/schedule.hpp"
#include "dnf/render/camera.hpp"

namespace dnf {

struct OracleCapabilities {
  bool view_conditioned = false;
  bool text_conditioned = false;
  bool adaptable = false;
};

struct Conditioning {
  std::optional<Camera> camera;
  std::string prompt;
  double guidance_scale = 1.0;
  /// Solid background the render was composited over, when not white.
  /// Oracles that synthesize their targets composite over the same color.
  std::optional<Vec3> background;
};

/// One freshly noised render used to update an oracle's adapter.
struct AdaptSample {
  Image x_t;
  Image eps;
  int t = 0;
  double weight = 1.0;
  Conditioning conditioning;
};

/// Denoiser contract consumed by score distillation. Implementations are
/// called from one thread at a time.
class GuidanceOracle {
 public:
  virtual ~GuidanceOracle() = default;

  virtual OracleCapabilities capabilities() const = 0;

  /// Working-space shape (width, height, channels) for an RGB image of the
  /// given size. The default codec is the identity on pixels.
  virtual std::array<int, 3> latent_shape(int width, int height) const {
    return {width, height, 3};
  }
  virtual bool identity_codec() const { return true; }
  virtual Image encode(const Image& image) { return image; }
  virtual Image decode(const Image& latent) { return latent; }

  /// Frozen noise prediction; output has the shape of `x_t`.
  virtual Image predict_eps(const Image& x_t, int t, const Conditioning& cond) = 0;

  /// Prediction including the adapter residual. Equals predict_eps() while
  /// the adapter is zero or when the oracle is not adaptable.
  virtual Image predict_eps_adapted(const Image& x_t, int t, const Conditioning& cond) {
    return predict_eps(x_t, t, cond);
  }

  /// One optimizer step on the adapter; returns the loss before the step.
  virtual double adapt(const std::vector<AdaptSample>& batch);

  /// Flat copy of the adapter parameters (empty when not adaptable).
  virtual std::vector<double> adapter_parameters() const { return {}; }
};

/// Per-channel affine residual r = scale_c * eps + bias_c added to a base
/// prediction, trained with Adam.
class AffineAdapter {
 public:
  explicit AffineAdapter(int channels = 3, double learning_rate = 1e-2);

  Image apply(const Image& base) const;
  /// Weighted mean squared error of apply(base_i) against eps_i, then one
  /// Adam step. Returns the pre-step loss.
  double step(const std::vector<Image>& base, const std::vector<AdaptSample>& batch);

  std::vector<double> parameters() const;
  bool is_zero() const;

 private:
  int channels_;
  double lr_;
  std::vector<double> params_;  // scale_0..scale_{c-1}, bias_0..bias_{c-1}
  std::vector<double> m_;
  std::vector<double> v_;
  int steps_ = 0;
};

/// Synthetic oracle that "knows" the clean image X(cond) for every
/// conditioning and predicts eps = (x_t - alpha_t X) / sigma_t.
class TargetImageOracle final : public GuidanceOracle {
 public:
  using TargetFn = std::function<Image(const Conditioning&)>;

  TargetImageOracle(TargetFn target, NoiseSchedule schedule, OracleCapabilities caps,
                    double adapter_lr = 1e-2);

  OracleCapabilities capabilities() const override { return caps_; }
  Image predict_eps(const Image& x_t, int t, const Conditioning& cond) override;
  Image predict_eps_adapted(const Image& x_t, int t, const Conditioning& cond) override;
  double adapt(const std::vector<AdaptSample>& batch) override;
  std::vector<double> adapter_parameters() const override;

  /// Target for a conditioning; cached per camera and background.
  const Image& target(const Conditioning& cond);

 private:
  TargetFn target_fn_;
  NoiseSchedule schedule_;
  OracleCapabilities caps_;
  AffineAdapter adapter_;
  struct CacheEntry {
    std::optional<Camera> camera;
    std::optional<Vec3> background;
    Image image;
  };
  std::vector<CacheEntry> cache_;
};

/// Adapter-training entry point: draws a timestep and noise per render,
/// builds x_t in the oracle's working space and runs one adapter step.
/// `conditions[i]` describes `renders[i]`. Returns the pre-step loss.
double adapt_oracle(GuidanceOracle& oracle, const std::vector<Image>& renders,
                    const std::vector<Conditioning>& conditions, const NoiseSchedule& schedule,
                    std::mt19937_64& rng);

}  // namespace dnf
