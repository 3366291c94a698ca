// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/render/render.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include "dnf/render/normals.hpp"

namespace dnf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double unit_draw(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t bits = splitmix64(seed ^ splitmix64(stream));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Rows processed together before their grid gradients are scattered.
constexpr int kWaveRows = 4;

}  // namespace

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::clamp(threads, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int begin = n * w / workers;
    const int end = n * (w + 1) / workers;
    pool.emplace_back([&fn, begin, end] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

void stratified_samples(double near, double far, int count, std::uint64_t seed,
                        std::uint64_t pixel, bool jitter, std::span<double> t_out,
                        std::span<double> delta_out) {
  const double span = far - near;
  const auto n = static_cast<std::uint64_t>(count);
  for (int k = 0; k < count; ++k) {
    const double u = jitter ? unit_draw(seed, pixel * n + static_cast<std::uint64_t>(k)) : 0.5;
    t_out[static_cast<std::size_t>(k)] = near + span * (k + u) / count;
  }
  for (int k = 0; k + 1 < count; ++k) {
    delta_out[static_cast<std::size_t>(k)] =
        t_out[static_cast<std::size_t>(k) + 1] - t_out[static_cast<std::size_t>(k)];
  }
  if (count > 0) {
    delta_out[static_cast<std::size_t>(count) - 1] = far - t_out[static_cast<std::size_t>(count) - 1];
  }
}

RenderGrad RenderGrad::zeros_like(const RenderOutput& out) {
  RenderGrad g;
  g.color = Image(out.color.width, out.color.height, out.color.channels);
  g.depth = Image(out.depth.width, out.depth.height, 1);
  g.opacity = Image(out.opacity.width, out.opacity.height, 1);
  g.weights = Image(out.weights.width, out.weights.height, out.weights.channels);
  g.normals = Image(out.normals.width, out.normals.height, out.normals.channels);
  return g;
}

RenderOutput render_view(const VolumeField& field, const Camera& camera,
                         const RenderOptions& options, RenderTape* tape) {
  camera.validate();
  if (options.samples_per_ray < 2) throw std::invalid_argument("render: samples_per_ray must be >= 2");
  const int w = camera.width;
  const int h = camera.height;
  const int s = options.samples_per_ray;
  const auto spp = static_cast<std::size_t>(s);

  RenderOutput out;
  out.color = Image(w, h, 3);
  out.depth = Image(w, h, 1);
  out.opacity = Image(w, h, 1);
  out.weights = Image(w, h, s);

  std::vector<Vec3> directions(out.color.pixel_count());
  std::vector<RaySample> samples(out.color.pixel_count() * spp);
  std::vector<std::uint8_t> interior(samples.size(), 0);
  const Vec3 origin = camera.position();

  parallel_for(h, options.threads, [&](int y) {
    std::vector<double> ts(spp);
    std::vector<double> deltas(spp);
    for (int x = 0; x < w; ++x) {
      const std::size_t pix = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                              static_cast<std::size_t>(x);
      const Vec3 dir = camera.pixel_direction(x, y);
      directions[pix] = dir;
      stratified_samples(camera.near, camera.far, s, options.seed, pix, options.jitter, ts, deltas);
      std::span<RaySample> ray(samples.data() + pix * spp, spp);
      for (std::size_t k = 0; k < spp; ++k) {
        const Vec3 p = origin + dir * ts[k];
        RaySample& rs = ray[k];
        rs.t = ts[k];
        rs.delta = deltas[k];
        if (field.is_exterior(p)) continue;
        const FieldSample fs = field.query(p);
        rs.density = fs.density;
        rs.color = fs.color;
        interior[pix * spp + k] = 1;
      }
      Vec3 color;
      double opacity = 0.0;
      double depth = 0.0;
      composite_ray_into(ray, options.background, camera.far, color, opacity, depth,
                         std::span(out.weights.data.data() + pix * spp, spp));
      for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = color[c];
      out.opacity.at(x, y) = opacity;
      out.depth.at(x, y) = depth;
    }
  });

  Image raw_normals;
  if (options.compute_normals) {
    raw_normals = estimate_normals(out.depth, camera);
    out.normals = raw_normals;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (out.opacity.at(x, y) <= options.normal_opacity_threshold) {
          for (int c = 0; c < 3; ++c) out.normals.at(x, y, c) = 0.0;
        }
      }
    }
  } else {
    out.normals = Image(w, h, 3);
  }

  if (tape != nullptr) {
    tape->camera = camera;
    tape->options = options;
    tape->directions = std::move(directions);
    tape->samples = std::move(samples);
    tape->interior = std::move(interior);
    tape->raw_normals = std::move(raw_normals);
  }
  return out;
}

void render_backward(const RadianceField& field, const RenderTape& tape,
                     const RenderOutput& output, const RenderGrad& upstream, FieldGradient& grad) {
  const Camera& camera = tape.camera;
  const RenderOptions& options = tape.options;
  const int w = camera.width;
  const int h = camera.height;
  const auto spp = static_cast<std::size_t>(options.samples_per_ray);
  const Vec3 origin = camera.position();

  Image d_depth = upstream.depth.data.empty() ? Image(w, h, 1) : upstream.depth;
  if (!upstream.normals.data.empty() && options.compute_normals) {
    Image d_normals = upstream.normals;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (output.opacity.at(x, y) <= options.normal_opacity_threshold) {
          for (int c = 0; c < 3; ++c) d_normals.at(x, y, c) = 0.0;
        }
      }
    }
    estimate_normals_backward(output.depth, camera, d_normals, d_depth);
  }

  const auto fdim = static_cast<std::size_t>(field.config().grid.feature_dim());
  const std::size_t row_samples = static_cast<std::size_t>(w) * spp;
  std::vector<std::vector<double>> wave_mlp(kWaveRows,
                                            std::vector<double>(field.mlp_params().size()));
  std::vector<std::vector<double>> wave_feat(kWaveRows, std::vector<double>(row_samples * fdim));
  std::vector<std::vector<std::uint8_t>> wave_used(kWaveRows,
                                                   std::vector<std::uint8_t>(row_samples));

  const bool has_color = !upstream.color.data.empty();
  const bool has_opacity = !upstream.opacity.data.empty();
  const bool has_weights = !upstream.weights.data.empty();

  for (int wave = 0; wave < h; wave += kWaveRows) {
    const int rows = std::min(kWaveRows, h - wave);
    parallel_for(rows, options.threads, [&](int r) {
      const int y = wave + r;
      auto& mlp_grad = wave_mlp[static_cast<std::size_t>(r)];
      auto& feat = wave_feat[static_cast<std::size_t>(r)];
      auto& used = wave_used[static_cast<std::size_t>(r)];
      std::fill(mlp_grad.begin(), mlp_grad.end(), 0.0);
      std::fill(used.begin(), used.end(), 0);
      std::vector<SampleGrad> sg(spp);
      for (int x = 0; x < w; ++x) {
        const std::size_t pix = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                static_cast<std::size_t>(x);
        std::span<const RaySample> ray(tape.samples.data() + pix * spp, spp);
        std::span<const double> weights(output.weights.data.data() + pix * spp, spp);
        const Vec3 dc = has_color ? Vec3{upstream.color.at(x, y, 0), upstream.color.at(x, y, 1),
                                         upstream.color.at(x, y, 2)}
                                  : Vec3{};
        const double dop = has_opacity ? upstream.opacity.at(x, y) : 0.0;
        const double dd = d_depth.at(x, y);
        std::span<const double> dw;
        if (has_weights) dw = std::span(upstream.weights.data.data() + pix * spp, spp);
        if (dc == Vec3{} && dop == 0.0 && dd == 0.0 && !has_weights) continue;
        composite_ray_backward(ray, options.background, weights, output.opacity.at(x, y),
                               output.depth.at(x, y), dc, dop, dd, dw, sg);
        const Vec3& dir = tape.directions[pix];
        for (std::size_t k = 0; k < spp; ++k) {
          if (!tape.interior[pix * spp + k]) continue;
          if (sg[k].d_density == 0.0 && sg[k].d_color == Vec3{}) continue;
          const Vec3 p = origin + dir * ray[k].t;
          const std::size_t slot = static_cast<std::size_t>(x) * spp + k;
          field.backward_mlp(p, sg[k].d_density, sg[k].d_color, mlp_grad,
                             std::span(feat.data() + slot * fdim, fdim));
          used[slot] = 1;
        }
      }
    });
    // Fixed-order reduction keeps results independent of the thread count.
    for (int r = 0; r < rows; ++r) {
      const int y = wave + r;
      const auto& mlp_grad = wave_mlp[static_cast<std::size_t>(r)];
      for (std::size_t i = 0; i < mlp_grad.size(); ++i) grad.mlp[i] += mlp_grad[i];
      const auto& feat = wave_feat[static_cast<std::size_t>(r)];
      const auto& used = wave_used[static_cast<std::size_t>(r)];
      for (int x = 0; x < w; ++x) {
        const std::size_t pix = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                static_cast<std::size_t>(x);
        const Vec3& dir = tape.directions[pix];
        for (std::size_t k = 0; k < spp; ++k) {
          const std::size_t slot = static_cast<std::size_t>(x) * spp + k;
          if (!used[slot]) continue;
          const Vec3 p = origin + dir * tape.samples[pix * spp + k].t;
          field.encoder().backward(p, std::span(feat.data() + slot * fdim, fdim), grad.grid);
        }
      }
    }
  }
}

}  // namespace dnf
