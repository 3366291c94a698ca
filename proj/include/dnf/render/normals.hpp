// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dnf/core/types.hpp"
#include "dnf/render/camera.hpp"

namespace dnf {

/// Camera-space normals from an expected-depth map (H x W x 1). Each pixel
/// is backprojected along its ray; the normal is the normalized cross
/// product of vertical and horizontal point differences (central inside,
/// one-sided on the border), oriented toward the camera. Pixels without a
/// neighbour on some axis, or with a degenerate cross product, get a zero
/// vector.
Image estimate_normals(const Image& depth, const Camera& camera);

/// Adds d(loss)/d(depth) for the given d(loss)/d(normals) into `d_depth`.
void estimate_normals_backward(const Image& depth, const Camera& camera, const Image& d_normals,
                               Image& d_depth);

}  // namespace dnf
