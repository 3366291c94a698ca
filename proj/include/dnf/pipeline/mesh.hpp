// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "dnf/core/types.hpp"
#include "dnf/field/radiance_field.hpp"

namespace dnf {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise seen from outside

  bool empty() const { return triangles.empty(); }
};

/// Density at which a sample of length `spacing` reaches alpha = 0.5.
double default_iso_level(double spacing);

/// Iso-surface of the density over a (resolution + 1)^3 lattice spanning
/// `box`, by marching tetrahedra (six per cube). Vertices on shared lattice
/// edges are welded, so closed level sets give watertight meshes.
TriangleMesh extract_mesh(const VolumeField& field, int resolution, double iso_level,
                          const Aabb& box = Aabb{});

void write_obj(std::ostream& out, const TriangleMesh& mesh);
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Symmetric Hausdorff distance between mesh vertices and a point sampling
/// of a reference surface, with `surface_distance` giving the exact
/// unsigned distance from a point to that surface.
template <typename DistanceFn>
double hausdorff_distance(const TriangleMesh& mesh, const std::vector<Vec3>& surface_points,
                          DistanceFn surface_distance);

}  // namespace dnf

#include "dnf/pipeline/mesh_inl.hpp"
