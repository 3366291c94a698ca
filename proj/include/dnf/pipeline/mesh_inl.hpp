// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace dnf {

template <typename DistanceFn>
double hausdorff_distance(const TriangleMesh& mesh, const std::vector<Vec3>& surface_points,
                          DistanceFn surface_distance) {
  if (mesh.vertices.empty() || surface_points.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  double worst = 0.0;
  for (const Vec3& v : mesh.vertices) worst = std::max(worst, surface_distance(v));
  for (const Vec3& s : surface_points) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& v : mesh.vertices) best = std::min(best, norm(v - s));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace dnf
