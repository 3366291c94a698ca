// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/pipeline/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dnf {

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "analytic-sphere") return SceneKind::kAnalyticSphere;
  if (name == "analytic-box") return SceneKind::kAnalyticBox;
  if (name == "textured-sphere") return SceneKind::kTexturedSphere;
  if (name == "from-files") return SceneKind::kFromFiles;
  throw ConfigError("unknown scene kind '" + name +
                    "' (expected analytic-sphere, analytic-box, textured-sphere or from-files)");
}

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kAnalyticSphere:
      return "analytic-sphere";
    case SceneKind::kAnalyticBox:
      return "analytic-box";
    case SceneKind::kTexturedSphere:
      return "textured-sphere";
    case SceneKind::kFromFiles:
      return "from-files";
  }
  return "unknown";
}

void SceneSpec::validate() const {
  if (kind == SceneKind::kFromFiles) {
    if (image_path.empty()) throw ConfigError("inputs.image is required for from-files scenes");
    if (mask_path.empty()) throw ConfigError("inputs.mask is required for from-files scenes");
    if (depth_path.empty()) throw ConfigError("inputs.depth is required for from-files scenes");
    return;
  }
  if (!(radius > 0.0 && radius < 1.0)) throw ConfigError("inputs.radius must lie in (0, 1)");
  if (!(density > 0.0)) throw ConfigError("inputs.density must be > 0");
}

AnalyticScene::AnalyticScene(SceneSpec spec, bool textured)
    : spec_(std::move(spec)), textured_(textured) {}

double AnalyticScene::signed_distance(const Vec3& p) const {
  if (spec_.kind == SceneKind::kAnalyticBox) {
    const Vec3 q{std::abs(p.x) - spec_.radius, std::abs(p.y) - spec_.radius,
                 std::abs(p.z) - spec_.radius};
    const Vec3 outside{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
    return norm(outside) + std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
  }
  return norm(p) - spec_.radius;
}

bool AnalyticScene::inside_solid(const Vec3& p) const {
  if (signed_distance(p) <= 0.0) return true;
  return std::any_of(spec_.blobs.begin(), spec_.blobs.end(),
                     [&](const Blob& b) { return norm(p - b.center) <= b.radius; });
}

bool AnalyticScene::is_exterior(const Vec3& p) const {
  return std::abs(p.x) > 1.0 || std::abs(p.y) > 1.0 || std::abs(p.z) > 1.0;
}

Vec3 AnalyticScene::texture(const Vec3& p) {
  const Vec3 u = normalize(p);
  const double stripes = std::sin(3.0 * std::atan2(u.y, u.x));
  return {0.5 + 0.4 * u.x, 0.5 + 0.4 * u.y, 0.5 + 0.35 * stripes};
}

FieldSample AnalyticScene::query(const Vec3& p) const {
  FieldSample s;
  if (signed_distance(p) <= 0.0) {
    s.density = spec_.density;
    s.color = textured_ && spec_.kind == SceneKind::kTexturedSphere ? texture(p) : spec_.albedo;
    return s;
  }
  for (const Blob& b : spec_.blobs) {
    if (norm(p - b.center) <= b.radius) {
      s.density = spec_.density;
      s.color = b.color;
      return s;
    }
  }
  return s;
}

namespace {

std::optional<double> hit_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
  const Vec3 oc = o - c;
  const double b = dot(oc, d);
  const double disc = b * b - (dot(oc, oc) - r * r);
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t < 0.0) return std::nullopt;
  return t;
}

std::optional<double> hit_box(const Vec3& o, const Vec3& d, double half) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (std::abs(o[a]) > half) return std::nullopt;
      continue;
    }
    double lo = (-half - o[a]) / d[a];
    double hi = (half - o[a]) / d[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  if (t0 > t1 || t0 < 0.0) return std::nullopt;
  return t0;
}

}  // namespace

std::optional<double> AnalyticScene::first_hit(const Vec3& origin, const Vec3& dir) const {
  std::optional<double> best = spec_.kind == SceneKind::kAnalyticBox
                                   ? hit_box(origin, dir, spec_.radius)
                                   : hit_sphere(origin, dir, {}, spec_.radius);
  for (const Blob& b : spec_.blobs) {
    const auto t = hit_sphere(origin, dir, b.center, b.radius);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

Image AnalyticScene::silhouette(const Camera& camera) const {
  Image mask(camera.width, camera.height, 1);
  const Vec3 origin = camera.position();
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      if (first_hit(origin, camera.pixel_direction(x, y))) mask.at(x, y) = 1.0;
    }
  }
  return mask;
}

namespace {

void sphere_points(const Vec3& center, double radius, int count, std::vector<Vec3>& out) {
  // Fibonacci lattice.
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    out.push_back(center + Vec3{r * std::cos(phi), r * std::sin(phi), z} * radius);
  }
}

}  // namespace

std::vector<Vec3> AnalyticScene::surface_samples(int count) const {
  std::vector<Vec3> out;
  const int parts = 1 + static_cast<int>(spec_.blobs.size());
  const int per = std::max(1, count / parts);
  if (spec_.kind == SceneKind::kAnalyticBox) {
    const int side = std::max(2, static_cast<int>(std::sqrt(per / 6.0)));
    const double h = spec_.radius;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sign : {-1.0, 1.0}) {
        for (int i = 0; i < side; ++i) {
          for (int j = 0; j < side; ++j) {
            const double u = -h + 2.0 * h * i / (side - 1);
            const double v = -h + 2.0 * h * j / (side - 1);
            Vec3 p;
            p[axis] = sign * h;
            p[(axis + 1) % 3] = u;
            p[(axis + 2) % 3] = v;
            out.push_back(p);
          }
        }
      }
    }
  } else {
    sphere_points({}, spec_.radius, per, out);
  }
  for (const Blob& b : spec_.blobs) sphere_points(b.center, b.radius, per, out);
  return out;
}

double AnalyticScene::surface_distance(const Vec3& p) const {
  double d = std::abs(signed_distance(p));
  for (const Blob& b : spec_.blobs) d = std::min(d, std::abs(norm(p - b.center) - b.radius));
  return d;
}

ReferenceBundle make_reference(const SceneSpec& spec, const Camera& camera,
                               const RenderOptions& options) {
  const AnalyticScene scene(spec, true);
  RenderOptions opts = options;
  opts.jitter = false;
  const RenderOutput out = render_view(scene, camera, opts);
  ReferenceBundle ref;
  ref.camera = camera;
  ref.image = out.color;
  ref.mask = scene.silhouette(camera);
  // Relative depth: only meaningful up to a positive affine map.
  ref.depth = out.depth;
  for (double& d : ref.depth.data) d = 0.5 * d + 0.1;
  return ref;
}

double mask_iou(const Image& opacity, const Image& mask, double threshold) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < opacity.data.size(); ++i) {
    const bool a = opacity.data[i] >= threshold;
    const bool b = mask.data[i] >= 0.5;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double psnr(const Image& a, const Image& b) {
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(std::max<std::size_t>(1, a.data.size()));
  return mse > 0.0 ? 10.0 * std::log10(1.0 / mse) : std::numeric_limits<double>::infinity();
}

}  // namespace dnf
