// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "dnf/core/types.hpp"

namespace dnf {

/// Camera position on a sphere around the origin. `polar` is measured from
/// the world +z axis, `azimuth` counter-clockwise from +x.
struct SphericalPose {
  double radius = 2.0;
  double polar = kPi / 2.0;
  double azimuth = 0.0;

  Vec3 position() const;
  bool operator==(const SphericalPose&) const = default;
};

struct CameraBasis {
  Vec3 forward;
  Vec3 right;
  Vec3 up;
};

/// Pinhole camera looking at the origin with world +z as the up hint.
struct Camera {
  SphericalPose pose;
  double fov_y = kPi / 4.0;
  int width = 64;
  int height = 64;
  double near = 1.0;
  double far = 3.0;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  Vec3 position() const { return pose.position(); }
  CameraBasis basis() const;
  /// World-space unit direction through the center of pixel (x, y).
  Vec3 pixel_direction(int x, int y) const;
  /// Camera-space unit direction (x right, y down, z forward).
  Vec3 camera_space_direction(int x, int y) const;

  bool operator==(const Camera&) const = default;
};

/// Camera with near/far bracketing a sphere of `scene_radius` around the origin.
Camera make_orbit_camera(const SphericalPose& pose, double fov_y, int width, int height,
                         double scene_radius);

struct Ray {
  Vec3 origin;
  Vec3 direction;
};

/// One ray per pixel in row-major order.
std::vector<Ray> generate_rays(const Camera& camera);

}  // namespace dnf
