// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "dnf/core/types.hpp"
#include "dnf/render/camera.hpp"
#include "dnf/render/render.hpp"

namespace dnf {

/// Supervision for the reference view: image (H x W x 3), binary mask and
/// relative depth (H x W x 1 each), and the camera they were taken from.
struct ReferenceBundle {
  Image image;
  Image mask;
  Image depth;
  Camera camera;

  /// Throws std::invalid_argument when shapes disagree, the mask is not
  /// binary, or it has no foreground pixel.
  void validate() const;
};

struct LossWeights {
  double rgb = 5.0;
  double mask = 1.0;
  double depth = 0.5;
  double normal = 0.1;
  double reg = 0.1;
  double sds = 1.0;

  void validate() const;
};

/// A scalar loss and its gradient with respect to the relevant inputs.
/// Images the loss does not touch stay empty.
struct LossTerm {
  double value = 0.0;
  Image d_color;
  Image d_opacity;
  Image d_depth;
  Image d_normals;
  Image d_weights;
};

/// lambda_rgb * mean_px |M (I - C)|^2 + lambda_mask * mean_px (M - O)^2.
LossTerm reconstruction_loss(const RenderOutput& render, const ReferenceBundle& ref,
                             const LossWeights& weights);

/// (1 - Corr(d_ref, d)) / 2 over foreground pixels of the reference mask.
/// Zero variance in either vector yields 0.5 with zero gradient.
LossTerm depth_pearson_loss(const Image& depth, const ReferenceBundle& ref);

inline constexpr int kNormalBlurSize = 9;
inline constexpr double kNormalBlurSigma = 1.5;

/// Normalized 9x9 Gaussian blur restricted to valid (non-zero) normals.
Image blur_normals(const Image& normals);

/// Mean over valid pixels of |n - stopgrad(blur(n))|.
LossTerm normal_smoothness_loss(const Image& normals);

struct ComponentLabels {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // 0 = background, components numbered from 1 in scan order
  std::vector<int> sizes;   // sizes[k] = pixels in component k + 1
  std::optional<int> largest;

  int at(int x, int y) const { return labels[static_cast<std::size_t>(y * width + x)]; }
};

/// 4-connected labeling of a binary H x W x 1 image. The largest component
/// wins ties by the smallest label.
ComponentLabels label_components(const Image& binary);

/// Sum over pixels outside the largest component of the binarized opacity
/// of sum_i w_i^2, divided by the pixel count. Gradient is on the weights.
LossTerm opacity_regularization(const RenderOutput& render, double threshold = 0.5);

/// Opacity mass outside the largest component (no squaring), for metrics.
double off_component_opacity(const Image& opacity, double threshold = 0.5);

}  // namespace dnf
