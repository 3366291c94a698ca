// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dnf/core/types.hpp"
#include "dnf/field/radiance_field.hpp"
#include "dnf/losses/losses.hpp"
#include "dnf/render/camera.hpp"
#include "dnf/render/render.hpp"

namespace dnf {

enum class SceneKind { kAnalyticSphere, kAnalyticBox, kTexturedSphere, kFromFiles };

SceneKind parse_scene_kind(const std::string& name);
std::string to_string(SceneKind kind);

/// Extra opaque ball, used to seed spurious floaters.
struct Blob {
  Vec3 center;
  double radius = 0.1;
  Vec3 color{1.0, 1.0, 1.0};
};

struct SceneSpec {
  SceneKind kind = SceneKind::kTexturedSphere;
  double radius = 0.5;        // sphere radius or box half-extent
  double density = 200.0;     // inside the solid
  Vec3 albedo{0.6, 0.6, 0.6};  // untextured color
  std::vector<Blob> blobs;
  // from-files inputs
  std::string image_path;
  std::string mask_path;
  std::string depth_path;

  bool has_ground_truth() const { return kind != SceneKind::kFromFiles; }
  /// Throws ConfigError when from-files paths are missing.
  void validate() const;
};

/// Closed-form density/color field for a SceneSpec. `textured` selects the
/// procedural texture of a textured sphere; otherwise the flat albedo.
class AnalyticScene final : public VolumeField {
 public:
  AnalyticScene(SceneSpec spec, bool textured);

  FieldSample query(const Vec3& p) const override;
  bool is_exterior(const Vec3& p) const override;

  const SceneSpec& spec() const { return spec_; }
  bool inside_solid(const Vec3& p) const;
  /// Signed distance to the main solid's surface (negative inside).
  double signed_distance(const Vec3& p) const;
  /// Procedural surface color of the textured sphere.
  static Vec3 texture(const Vec3& p);

  /// First-hit ray parameter of the main solid and blobs, if any.
  std::optional<double> first_hit(const Vec3& origin, const Vec3& dir) const;
  /// Exact silhouette: 1 where the pixel-center ray hits the scene.
  Image silhouette(const Camera& camera) const;

  /// Roughly `count` points spread over the surfaces of the solid and blobs.
  std::vector<Vec3> surface_samples(int count) const;
  /// Unsigned distance to the nearest of those surfaces.
  double surface_distance(const Vec3& p) const;

 private:
  SceneSpec spec_;
  bool textured_;
};

/// Reference bundle rendered from an analytic scene: textured color,
/// exact silhouette mask and an affinely rescaled expected depth.
ReferenceBundle make_reference(const SceneSpec& spec, const Camera& camera,
                               const RenderOptions& options);

/// Mask IoU between an opacity map thresholded at 0.5 and a binary mask.
double mask_iou(const Image& opacity, const Image& mask, double threshold = 0.5);
double psnr(const Image& a, const Image& b);

}  // namespace dnf
