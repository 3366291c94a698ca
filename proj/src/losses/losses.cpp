// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/losses/losses.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace dnf {

void ReferenceBundle::validate() const {
  if (image.channels != 3) throw std::invalid_argument("reference: image must have 3 channels");
  if (mask.channels != 1 || depth.channels != 1) {
    throw std::invalid_argument("reference: mask and depth must have 1 channel");
  }
  if (image.width != mask.width || image.height != mask.height || image.width != depth.width ||
      image.height != depth.height) {
    throw std::invalid_argument("reference: image, mask and depth resolutions differ");
  }
  if (camera.width != image.width || camera.height != image.height) {
    throw std::invalid_argument("reference: camera resolution differs from image");
  }
  bool any = false;
  for (double m : mask.data) {
    if (m != 0.0 && m != 1.0) throw std::invalid_argument("reference: mask must be binary");
    any = any || m == 1.0;
  }
  if (!any) throw std::invalid_argument("reference: mask has no foreground pixel");
}

void LossWeights::validate() const {
  for (double v : {rgb, mask, depth, normal, reg, sds}) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("loss weights must be finite and >= 0");
  }
}

LossTerm reconstruction_loss(const RenderOutput& render, const ReferenceBundle& ref,
                             const LossWeights& weights) {
  if (render.width() != ref.image.width || render.height() != ref.image.height) {
    throw std::invalid_argument("reconstruction_loss: render " + render.color.shape_string() +
                                " vs reference " + ref.image.shape_string());
  }
  const int w = ref.image.width;
  const int h = ref.image.height;
  const double n = static_cast<double>(w) * h;
  LossTerm out;
  out.d_color = Image(w, h, 3);
  out.d_opacity = Image(w, h, 1);
  double rgb = 0.0;
  double mask = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = ref.mask.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double r = m * (ref.image.at(x, y, c) - render.color.at(x, y, c));
        rgb += r * r;
        out.d_color.at(x, y, c) = -2.0 * weights.rgb * m * r / n;
      }
      const double r = m - render.opacity.at(x, y);
      mask += r * r;
      out.d_opacity.at(x, y) = -2.0 * weights.mask * r / n;
    }
  }
  out.value = weights.rgb * rgb / n + weights.mask * mask / n;
  return out;
}

LossTerm depth_pearson_loss(const Image& depth, const ReferenceBundle& ref) {
  if (!depth.same_shape(ref.depth)) {
    throw std::invalid_argument("depth_pearson_loss: shape mismatch");
  }
  LossTerm out;
  out.d_depth = Image(depth.width, depth.height, 1);
  std::vector<std::size_t> fg;
  for (std::size_t i = 0; i < ref.mask.data.size(); ++i) {
    if (ref.mask.data[i] > 0.5) fg.push_back(i);
  }
  if (fg.size() < 2) {
    out.value = 0.5;
    return out;
  }
  const double n = static_cast<double>(fg.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i : fg) {
    mean_a += ref.depth.data[i];
    mean_b += depth.data[i];
  }
  mean_a /= n;
  mean_b /= n;
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (std::size_t i : fg) {
    const double a = ref.depth.data[i] - mean_a;
    const double b = depth.data[i] - mean_b;
    saa += a * a;
    sbb += b * b;
    sab += a * b;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    out.value = 0.5;
    return out;
  }
  const double denom = std::sqrt(saa * sbb);
  const double corr = std::clamp(sab / denom, -1.0, 1.0);
  out.value = 0.5 * (1.0 - corr);
  for (std::size_t i : fg) {
    const double a = ref.depth.data[i] - mean_a;
    const double b = depth.data[i] - mean_b;
    out.d_depth.data[i] = -0.5 * (a / denom - (sab / denom) * b / sbb);
  }
  return out;
}

namespace {

std::array<double, kNormalBlurSize * kNormalBlurSize> gaussian_kernel() {
  std::array<double, kNormalBlurSize * kNormalBlurSize> k{};
  constexpr int r = kNormalBlurSize / 2;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      k[static_cast<std::size_t>((dy + r) * kNormalBlurSize + dx + r)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * kNormalBlurSigma * kNormalBlurSigma));
    }
  }
  return k;
}

bool valid_normal(const Image& n, int x, int y) {
  return n.at(x, y, 0) != 0.0 || n.at(x, y, 1) != 0.0 || n.at(x, y, 2) != 0.0;
}

}  // namespace

Image blur_normals(const Image& normals) {
  static const auto kernel = gaussian_kernel();
  constexpr int r = kNormalBlurSize / 2;
  const int w = normals.width;
  const int h = normals.height;
  Image out(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!valid_normal(normals, x, y)) continue;
      double acc[3] = {0.0, 0.0, 0.0};
      double total = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w || !valid_normal(normals, xx, yy)) continue;
          const double k = kernel[static_cast<std::size_t>((dy + r) * kNormalBlurSize + dx + r)];
          for (int c = 0; c < 3; ++c) acc[c] += k * normals.at(xx, yy, c);
          total += k;
        }
      }
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = acc[c] / total;
    }
  }
  return out;
}

LossTerm normal_smoothness_loss(const Image& normals) {
  if (normals.channels != 3) throw std::invalid_argument("normal_smoothness_loss: need 3 channels");
  const Image blurred = blur_normals(normals);
  LossTerm out;
  out.d_normals = Image(normals.width, normals.height, 3);
  std::size_t count = 0;
  double sum = 0.0;
  for (int y = 0; y < normals.height; ++y) {
    for (int x = 0; x < normals.width; ++x) {
      if (!valid_normal(normals, x, y)) continue;
      ++count;
      Vec3 r{normals.at(x, y, 0) - blurred.at(x, y, 0), normals.at(x, y, 1) - blurred.at(x, y, 1),
             normals.at(x, y, 2) - blurred.at(x, y, 2)};
      const double len = norm(r);
      sum += len;
      if (len > 0.0) {
        for (int c = 0; c < 3; ++c) out.d_normals.at(x, y, c) = r[c] / len;
      }
    }
  }
  if (count == 0) return out;
  out.value = sum / static_cast<double>(count);
  for (double& g : out.d_normals.data) g /= static_cast<double>(count);
  return out;
}

ComponentLabels label_components(const Image& binary) {
  if (binary.channels != 1) throw std::invalid_argument("label_components: need 1 channel");
  ComponentLabels out;
  out.width = binary.width;
  out.height = binary.height;
  out.labels.assign(binary.data.size(), 0);
  const int w = binary.width;
  const int h = binary.height;
  std::vector<int> stack;
  int next = 0;
  for (int start = 0; start < w * h; ++start) {
    if (binary.data[static_cast<std::size_t>(start)] == 0.0 ||
        out.labels[static_cast<std::size_t>(start)] != 0) {
      continue;
    }
    ++next;
    int size = 0;
    stack.push_back(start);
    out.labels[static_cast<std::size_t>(start)] = next;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      ++size;
      const int x = i % w;
      const int y = i / w;
      const std::array<std::array<int, 2>, 4> nbrs{{{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}}};
      for (const auto& [nx, ny] : nbrs) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const auto j = static_cast<std::size_t>(ny * w + nx);
        if (binary.data[j] == 0.0 || out.labels[j] != 0) continue;
        out.labels[j] = next;
        stack.push_back(static_cast<int>(j));
      }
    }
    out.sizes.push_back(size);
    if (!out.largest || size > out.sizes[static_cast<std::size_t>(*out.largest - 1)]) {
      out.largest = next;
    }
  }
  return out;
}

namespace {

Image binarize(const Image& opacity, double threshold) {
  Image b(opacity.width, opacity.height, 1);
  for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] = opacity.data[i] >= threshold ? 1.0 : 0.0;
  return b;
}

}  // namespace

LossTerm opacity_regularization(const RenderOutput& render, double threshold) {
  const Image& weights = render.weights;
  const int w = render.opacity.width;
  const int h = render.opacity.height;
  LossTerm out;
  out.d_weights = Image(weights.width, weights.height, weights.channels);
  const ComponentLabels cc = label_components(binarize(render.opacity, threshold));
  if (!cc.largest) return out;
  const double n = static_cast<double>(w) * h;
  const auto s = static_cast<std::size_t>(weights.channels);
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (cc.at(x, y) == *cc.largest) continue;
      const std::size_t base = weights.index(x, y, 0);
      for (std::size_t k = 0; k < s; ++k) {
        const double wi = weights.data[base + k];
        sum += wi * wi;
        out.d_weights.data[base + k] = 2.0 * wi / n;
      }
    }
  }
  out.value = sum / n;
  return out;
}

double off_component_opacity(const Image& opacity, double threshold) {
  const ComponentLabels cc = label_components(binarize(opacity, threshold));
  double mass = 0.0;
  for (int y = 0; y < opacity.height; ++y) {
    for (int x = 0; x < opacity.width; ++x) {
      if (cc.largest && cc.at(x, y) == *cc.largest) continue;
      mass += opacity.at(x, y);
    }
  }
  return mass;
}

}  // namespace dnf
