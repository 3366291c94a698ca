// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <sstream>

#include "dnf/field/checkpoint.hpp"
#include "dnf/field/radiance_field.hpp"
#include "support/fd.hpp"

using namespace dnf;

namespace {

FieldConfig tiny_config() {
  FieldConfig c;
  c.grid.num_levels = 2;
  c.grid.base_resolution = 2;
  c.grid.max_resolution = 4;
  c.grid.features_per_level = 2;
  c.grid.table_size_log2 = 4;
  c.mlp.hidden_layers = 1;
  c.mlp.hidden_width = 8;
  return c;
}

// Independent trilinear blend of the 8 lattice corners of one level.
std::vector<double> brute_force_level(const HashGridEncoder& enc, std::span<const double> params,
                                      const Vec3& p, int level) {
  const HashGridConfig& c = enc.config();
  const int res = c.resolution(level);
  const int feats = c.features_per_level;
  const std::size_t offset = c.level_offset(level);
  const auto verts = static_cast<std::uint32_t>(res + 1);
  double pos[3];
  int cell[3];
  for (int a = 0; a < 3; ++a) {
    pos[a] = (p[a] - c.bounding_box.lo[a]) / (c.bounding_box.hi[a] - c.bounding_box.lo[a]) * res;
    cell[a] = std::min(static_cast<int>(std::floor(pos[a])), res - 1);
  }
  std::vector<double> out(static_cast<std::size_t>(feats), 0.0);
  for (int dz = 0; dz <= 1; ++dz) {
    for (int dy = 0; dy <= 1; ++dy) {
      for (int dx = 0; dx <= 1; ++dx) {
        const auto x = static_cast<std::uint32_t>(cell[0] + dx);
        const auto y = static_cast<std::uint32_t>(cell[1] + dy);
        const auto z = static_cast<std::uint32_t>(cell[2] + dz);
        const double w = (dx ? pos[0] - cell[0] : 1 - (pos[0] - cell[0])) *
                         (dy ? pos[1] - cell[1] : 1 - (pos[1] - cell[1])) *
                         (dz ? pos[2] - cell[2] : 1 - (pos[2] - cell[2]));
        const std::size_t row =
            c.level_is_dense(level)
                ? x + y * verts + z * verts * verts
                : spatial_hash(x, y, z) & (c.level_entries(level) - 1);
        for (int f = 0; f < feats; ++f) {
          out[static_cast<std::size_t>(f)] += w * params[offset + row * feats + f];
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("hash grid config validation") {
  HashGridConfig c;
  CHECK_NOTHROW(c.validate());
  c.base_resolution = 4096;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = HashGridConfig{};
  c.table_size_log2 = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = HashGridConfig{};
  c.num_levels = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("per-level resolutions grow geometrically from base to max") {
  HashGridConfig c;
  CHECK(c.resolution(0) == 16);
  CHECK(c.resolution(c.num_levels - 1) == 2048);
  for (int l = 1; l < c.num_levels; ++l) CHECK(c.resolution(l) >= c.resolution(l - 1));
  c.num_levels = 1;
  CHECK(c.resolution(0) == c.base_resolution);
}

TEST_CASE("encoding at a grid vertex returns that vertex's entry") {
  FieldConfig cfg = tiny_config();
  cfg.grid.num_levels = 1;
  cfg.grid.base_resolution = 4;
  cfg.grid.max_resolution = 4;
  cfg.grid.table_size_log2 = 8;  // 125 vertices fit, so indexing is dense
  HashGridEncoder enc(cfg.grid);
  std::vector<double> params(cfg.grid.param_count());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : params) v = u(rng);
  // Vertex (1, 2, 3) of a 4-cell lattice on [-1, 1]^3.
  const Vec3 p{-1.0 + 0.5, -1.0 + 1.0, -1.0 + 1.5};
  std::vector<double> feat(2);
  enc.encode(p, params, feat);
  const std::size_t row = 1 + 2 * 5 + 3 * 25;
  CHECK(feat[0] == doctest::Approx(params[row * 2]).epsilon(1e-14));
  CHECK(feat[1] == doctest::Approx(params[row * 2 + 1]).epsilon(1e-14));
}

TEST_CASE("zero table gives zero features") {
  FieldConfig cfg = tiny_config();
  HashGridEncoder enc(cfg.grid);
  std::vector<double> params(cfg.grid.param_count(), 0.0);
  std::vector<double> feat(static_cast<std::size_t>(cfg.grid.feature_dim()), 1.0);
  enc.encode({0.3, -0.2, 0.9}, params, feat);
  for (double f : feat) CHECK(f == 0.0);
}

TEST_CASE("cell center of a single-cell level averages the 8 corners") {
  FieldConfig cfg = tiny_config();
  cfg.grid.num_levels = 1;
  cfg.grid.base_resolution = 1;
  cfg.grid.max_resolution = 1;
  HashGridEncoder enc(cfg.grid);
  std::vector<double> params(cfg.grid.param_count());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : params) v = u(rng);
  std::vector<double> feat(2);
  enc.encode({0.0, 0.0, 0.0}, params, feat);
  const auto oracle = brute_force_level(enc, params, {0.0, 0.0, 0.0}, 0);
  double mean0 = 0.0;
  for (std::size_t r = 0; r < 8; ++r) mean0 += params[r * 2] / 8.0;
  CHECK(feat[0] == doctest::Approx(mean0).epsilon(1e-12));
  CHECK(feat[0] == doctest::Approx(oracle[0]).epsilon(1e-12));
  CHECK(feat[1] == doctest::Approx(oracle[1]).epsilon(1e-12));
}

TEST_CASE("encoding matches brute-force trilinear blend on every level") {
  FieldConfig cfg;
  cfg.grid.num_levels = 6;
  cfg.grid.base_resolution = 3;
  cfg.grid.max_resolution = 90;
  cfg.grid.table_size_log2 = 10;  // coarse levels dense, fine levels hashed
  HashGridEncoder enc(cfg.grid);
  std::vector<double> params(cfg.grid.param_count());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : params) v = u(rng);
  CHECK(cfg.grid.level_is_dense(0));
  CHECK_FALSE(cfg.grid.level_is_dense(5));
  std::vector<double> feat(static_cast<std::size_t>(cfg.grid.feature_dim()));
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    enc.encode(p, params, feat);
    for (int l = 0; l < cfg.grid.num_levels; ++l) {
      const auto oracle = brute_force_level(enc, params, p, l);
      for (int f = 0; f < 2; ++f) {
        CHECK(feat[static_cast<std::size_t>(l * 2 + f)] ==
              doctest::Approx(oracle[static_cast<std::size_t>(f)]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("fresh field is nearly empty and gray") {
  FieldConfig cfg;
  cfg.grid.num_levels = 8;
  cfg.grid.max_resolution = 128;
  cfg.grid.table_size_log2 = 14;
  cfg.mlp.hidden_width = 32;
  RadianceField field(cfg, 42);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  const double bias_level = softplus(cfg.density_bias);
  double tau_min = 1e9;
  double tau_max = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const FieldSample s = field.query({u(rng), u(rng), u(rng)});
    tau_min = std::min(tau_min, s.density);
    tau_max = std::max(tau_max, s.density);
    for (int c = 0; c < 3; ++c) {
      CHECK(s.color[c] >= 0.0);
      CHECK(s.color[c] <= 1.0);
      CHECK(std::abs(s.color[c] - 0.5) < 0.05);
    }
  }
  CHECK(tau_max < 10.0 * bias_level);
  CHECK(tau_max - tau_min < 0.05 * bias_level);
}

TEST_CASE("exterior points have zero density; identical points identical outputs") {
  RadianceField field(tiny_config(), 9);
  CHECK(field.query({1.5, 0.0, 0.0}).density == 0.0);
  CHECK(field.query({0.0, -1.01, 0.0}).density == 0.0);
  std::vector<Vec3> pts{{0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}};
  std::vector<FieldSample> out(2);
  field.query_batch(pts, out);
  CHECK(out[0].density == out[1].density);
  CHECK(out[0].color == out[1].color);
}

TEST_CASE("field gradients match central differences") {
  FieldConfig cfg = tiny_config();
  cfg.mlp.hidden_layers = 2;
  cfg.density_bias = 0.0;
  RadianceField field(cfg, 17);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  // Large grid values so the MLP sees non-trivial inputs.
  for (double& g : field.grid_params()) g = u(rng);
  CHECK(field.param_count() <= 1000);

  std::vector<Vec3> pts;
  std::vector<double> wd;
  std::vector<Vec3> wc;
  for (int i = 0; i < 16; ++i) {
    pts.push_back({u(rng), u(rng), u(rng)});
    wd.push_back(u(rng));
    wc.push_back({u(rng), u(rng), u(rng)});
  }
  auto loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const FieldSample q = field.query(pts[i]);
      s += wd[i] * q.density + dot(wc[i], q.color);
    }
    return s;
  };
  FieldGradient g = field.make_gradient();
  for (std::size_t i = 0; i < pts.size(); ++i) field.backward(pts[i], wd[i], wc[i], g);

  auto grid_check = testing::check_gradient(field.grid_params(), g.grid,
                                            testing::probe_indices(g.grid.size(), 1000), loss);
  auto mlp_check = testing::check_gradient(field.mlp_params(), g.mlp,
                                           testing::probe_indices(g.mlp.size(), 1000), loss);
  CHECK(grid_check.relative_error < 1e-3);
  CHECK(mlp_check.relative_error < 1e-3);

  // Position gradient of one point.
  const Vec3 p{0.13, -0.41, 0.27};
  const Vec3 analytic = field.position_gradient(p, 0.7, {0.2, -0.5, 0.9});
  for (int a = 0; a < 3; ++a) {
    Vec3 hi = p;
    Vec3 lo = p;
    hi[a] += 1e-6;
    lo[a] -= 1e-6;
    auto f = [&](const Vec3& q) {
      const FieldSample s = field.query(q);
      return 0.7 * s.density + dot(Vec3{0.2, -0.5, 0.9}, s.color);
    };
    const double numeric = (f(hi) - f(lo)) / 2e-6;
    CHECK(analytic[a] == doctest::Approx(numeric).epsilon(1e-4));
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  FieldConfig cfg = tiny_config();
  RadianceField field(cfg, 123);
  std::stringstream buf;
  write_checkpoint(buf, field, "seed = 5\n");
  const Checkpoint back = read_checkpoint(buf);
  CHECK(back.field == field);
  CHECK(back.run_config == "seed = 5\n");
}

TEST_CASE("checkpoint rejects a bad magic and truncated data") {
  std::stringstream bad("XXXX0000");
  CHECK_THROWS_AS(read_checkpoint(bad), FormatError);

  RadianceField field(tiny_config(), 1);
  std::stringstream buf;
  write_checkpoint(buf, field);
  std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 7));
  CHECK_THROWS_AS(read_checkpoint(truncated), FormatError);
}
