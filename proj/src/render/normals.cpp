// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/render/normals.hpp"

#include <stdexcept>
#include <vector>

namespace dnf {

namespace {

constexpr double kDegenerate = 1e-12;

struct Stencil {
  int lo = 0;
  int hi = 0;
  bool valid = false;
};

Stencil stencil(int i, int n) {
  if (n < 2) return {};
  if (i == 0) return {0, 1, true};
  if (i == n - 1) return {n - 2, n - 1, true};
  return {i - 1, i + 1, true};
}

std::vector<Vec3> camera_directions(const Camera& camera) {
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height));
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) dirs.push_back(camera.camera_space_direction(x, y));
  }
  return dirs;
}

void check(const Image& depth, const Camera& camera) {
  if (depth.channels != 1 || depth.width != camera.width || depth.height != camera.height) {
    throw std::invalid_argument("estimate_normals: depth shape " + depth.shape_string() +
                                " does not match camera");
  }
}

}  // namespace

Image estimate_normals(const Image& depth, const Camera& camera) {
  check(depth, camera);
  const int w = depth.width;
  const int h = depth.height;
  const std::vector<Vec3> dirs = camera_directions(camera);
  auto point = [&](int x, int y) {
    return dirs[static_cast<std::size_t>(y * w + x)] * depth.at(x, y);
  };
  Image normals(w, h, 3, 0.0);
  for (int y = 0; y < h; ++y) {
    const Stencil sy = stencil(y, h);
    for (int x = 0; x < w; ++x) {
      const Stencil sx = stencil(x, w);
      if (!sx.valid || !sy.valid) continue;
      const Vec3 dx = point(sx.hi, y) - point(sx.lo, y);
      const Vec3 dy = point(x, sy.hi) - point(x, sy.lo);
      const Vec3 n = cross(dy, dx);
      const double len = norm(n);
      if (len < kDegenerate) continue;
      for (int c = 0; c < 3; ++c) normals.at(x, y, c) = n[c] / len;
    }
  }
  return normals;
}

void estimate_normals_backward(const Image& depth, const Camera& camera, const Image& d_normals,
                               Image& d_depth) {
  check(depth, camera);
  const int w = depth.width;
  const int h = depth.height;
  const std::vector<Vec3> dirs = camera_directions(camera);
  auto dir = [&](int x, int y) -> const Vec3& { return dirs[static_cast<std::size_t>(y * w + x)]; };
  auto point = [&](int x, int y) { return dir(x, y) * depth.at(x, y); };
  auto add_point_grad = [&](int x, int y, const Vec3& g) { d_depth.at(x, y) += dot(g, dir(x, y)); };

  for (int y = 0; y < h; ++y) {
    const Stencil sy = stencil(y, h);
    for (int x = 0; x < w; ++x) {
      const Stencil sx = stencil(x, w);
      if (!sx.valid || !sy.valid) continue;
      const Vec3 g_n{d_normals.at(x, y, 0), d_normals.at(x, y, 1), d_normals.at(x, y, 2)};
      if (g_n == Vec3{}) continue;
      const Vec3 dx = point(sx.hi, y) - point(sx.lo, y);
      const Vec3 dy = point(x, sy.hi) - point(x, sy.lo);
      const Vec3 raw = cross(dy, dx);
      const double len = norm(raw);
      if (len < kDegenerate) continue;
      const Vec3 n = raw / len;
      const Vec3 g_raw = (g_n - n * dot(n, g_n)) / len;
      // raw = dy x dx
      const Vec3 g_dy = cross(dx, g_raw);
      const Vec3 g_dx = cross(g_raw, dy);
      add_point_grad(sx.hi, y, g_dx);
      add_point_grad(sx.lo, y, -g_dx);
      add_point_grad(x, sy.hi, g_dy);
      add_point_grad(x, sy.lo, -g_dy);
    }
  }
}

}  // namespace dnf
