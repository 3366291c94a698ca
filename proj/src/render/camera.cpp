// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/render/camera.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dnf {

Vec3 SphericalPose::position() const {
  const double s = std::sin(polar);
  return {radius * s * std::cos(azimuth), radius * s * std::sin(azimuth),
          radius * std::cos(polar)};
}

void Camera::validate() const {
  if (!(pose.radius > 0.0)) throw std::invalid_argument("camera: radius must be > 0");
  if (!(pose.polar > 0.0 && pose.polar < kPi)) {
    throw std::invalid_argument("camera: polar angle must lie in (0, pi)");
  }
  if (!(fov_y > 0.0 && fov_y < kPi)) throw std::invalid_argument("camera: fov_y must lie in (0, pi)");
  if (width < 1 || height < 1) throw std::invalid_argument("camera: resolution must be positive");
  if (!(near < far)) throw std::invalid_argument("camera: near must be < far");
}

CameraBasis Camera::basis() const {
  const Vec3 forward = normalize(-position());
  const Vec3 right = normalize(cross(forward, Vec3{0.0, 0.0, 1.0}));
  const Vec3 up = cross(right, forward);
  return {forward, right, up};
}

Vec3 Camera::camera_space_direction(int x, int y) const {
  const double tan_half = std::tan(0.5 * fov_y);
  const double aspect = static_cast<double>(width) / static_cast<double>(height);
  const double sx = (2.0 * (x + 0.5) / width - 1.0) * tan_half * aspect;
  const double sy = (2.0 * (y + 0.5) / height - 1.0) * tan_half;
  return normalize(Vec3{sx, sy, 1.0});
}

Vec3 Camera::pixel_direction(int x, int y) const {
  const CameraBasis b = basis();
  const Vec3 d = camera_space_direction(x, y);
  // Camera y points down the image, i.e. along -up.
  return normalize(b.right * d.x - b.up * d.y + b.forward * d.z);
}

Camera make_orbit_camera(const SphericalPose& pose, double fov_y, int width, int height,
                         double scene_radius) {
  Camera c;
  c.pose = pose;
  c.fov_y = fov_y;
  c.width = width;
  c.height = height;
  c.near = std::max(1e-3, pose.radius - scene_radius);
  c.far = pose.radius + scene_radius;
  return c;
}

std::vector<Ray> generate_rays(const Camera& camera) {
  camera.validate();
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height));
  const Vec3 origin = camera.position();
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) rays.push_back({origin, camera.pixel_direction(x, y)});
  }
  return rays;
}

}  // namespace dnf
