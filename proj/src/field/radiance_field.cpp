// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/field/radiance_field.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace dnf {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void FieldConfig::validate() const {
  grid.validate();
  if (mlp.hidden_layers < 0 || mlp.hidden_layers > 8) {
    throw ConfigError("field: hidden_layers must lie in [0, 8]");
  }
  if (mlp.hidden_layers > 0 && (mlp.hidden_width < 1 || mlp.hidden_width > 1024)) {
    throw ConfigError("field: hidden_width must lie in [1, 1024]");
  }
  if (!std::isfinite(density_bias)) throw ConfigError("field: density_bias must be finite");
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string FieldConfig::to_text() const {
  std::ostringstream os;
  os << "num_levels = " << grid.num_levels << "\n";
  os << "base_resolution = " << grid.base_resolution << "\n";
  os << "max_resolution = " << grid.max_resolution << "\n";
  os << "features_per_level = " << grid.features_per_level << "\n";
  os << "table_size_log2 = " << grid.table_size_log2 << "\n";
  os << "bbox_min = " << fmt(grid.bounding_box.lo.x) << " " << fmt(grid.bounding_box.lo.y) << " "
     << fmt(grid.bounding_box.lo.z) << "\n";
  os << "bbox_max = " << fmt(grid.bounding_box.hi.x) << " " << fmt(grid.bounding_box.hi.y) << " "
     << fmt(grid.bounding_box.hi.z) << "\n";
  os << "hidden_layers = " << mlp.hidden_layers << "\n";
  os << "hidden_width = " << mlp.hidden_width << "\n";
  os << "density_bias = " << fmt(density_bias) << "\n";
  return os.str();
}

FieldConfig parse_field_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("field config: missing key '" + key + "'");
    return it->second;
  };
  auto vec = [&](const std::string& key) {
    std::istringstream vs(need(key));
    Vec3 v;
    if (!(vs >> v.x >> v.y >> v.z)) throw FormatError("field config: bad vector '" + key + "'");
    return v;
  };
  FieldConfig c;
  try {
    c.grid.num_levels = std::stoi(need("num_levels"));
    c.grid.base_resolution = std::stoi(need("base_resolution"));
    c.grid.max_resolution = std::stoi(need("max_resolution"));
    c.grid.features_per_level = std::stoi(need("features_per_level"));
    c.grid.table_size_log2 = std::stoi(need("table_size_log2"));
    c.grid.bounding_box.lo = vec("bbox_min");
    c.grid.bounding_box.hi = vec("bbox_max");
    c.mlp.hidden_layers = std::stoi(need("hidden_layers"));
    c.mlp.hidden_width = std::stoi(need("hidden_width"));
    c.density_bias = std::stod(need("density_bias"));
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("field config: unparsable value (") + e.what() + ")");
  }
  return c;
}

void FieldGradient::zero() {
  std::fill(grid.begin(), grid.end(), 0.0);
  std::fill(mlp.begin(), mlp.end(), 0.0);
}

void FieldGradient::add(const FieldGradient& other) {
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] += other.grid[i];
  for (std::size_t i = 0; i < mlp.size(); ++i) mlp[i] += other.mlp[i];
}

double FieldGradient::squared_norm() const {
  double s = 0.0;
  for (double g : grid) s += g * g;
  for (double g : mlp) s += g * g;
  return s;
}

bool FieldGradient::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(grid.begin(), grid.end(), finite) &&
         std::all_of(mlp.begin(), mlp.end(), finite);
}

namespace {

FieldConfig checked(FieldConfig c) {
  c.validate();
  return c;
}

struct Scratch {
  std::vector<double> features;
  std::vector<double> mlp;
  std::vector<double> d_features;
  std::array<double, 4> raw{};
  std::array<double, 4> d_raw{};

  void fit(std::size_t feature_dim, std::size_t mlp_size) {
    if (features.size() < feature_dim) {
      features.resize(feature_dim);
      d_features.resize(feature_dim);
    }
    if (mlp.size() < mlp_size) mlp.resize(mlp_size);
  }
};

Scratch& scratch_for(std::size_t feature_dim, std::size_t mlp_size) {
  thread_local Scratch s;
  s.fit(feature_dim, mlp_size);
  return s;
}

}  // namespace

RadianceField::RadianceField(FieldConfig config)
    : config_(checked(config)),
      encoder_(config_.grid),
      mlp_(config_.grid.feature_dim(), config_.mlp.hidden_layers, config_.mlp.hidden_width, 4),
      grid_(config_.grid.param_count(), 0.0),
      mlp_params_(mlp_.param_count(), 0.0) {}

RadianceField::RadianceField(FieldConfig config, std::uint64_t seed)
    : RadianceField(std::move(config)) {
  initialize(seed);
}

void RadianceField::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> grid_dist(-1e-4, 1e-4);
  for (double& g : grid_) g = to_f32(grid_dist(rng));
  mlp_.initialize(mlp_params_, rng);
  for (double& w : mlp_params_) w = to_f32(w);
}

FieldGradient RadianceField::make_gradient() const {
  FieldGradient g;
  g.grid.assign(grid_.size(), 0.0);
  g.mlp.assign(mlp_params_.size(), 0.0);
  return g;
}

void RadianceField::raw_forward(const Vec3& p, std::span<double> features, std::span<double> raw,
                                std::span<double> scratch) const {
  encoder_.encode(p, grid_, features);
  mlp_.forward(mlp_params_, features, raw, scratch);
}

FieldSample RadianceField::query(const Vec3& p) const {
  const auto fdim = static_cast<std::size_t>(config_.grid.feature_dim());
  Scratch& s = scratch_for(fdim, mlp_.scratch_size());
  raw_forward(p, std::span(s.features.data(), fdim), s.raw, s.mlp);
  FieldSample out;
  out.density = is_exterior(p) ? 0.0 : softplus(s.raw[0] + config_.density_bias);
  out.color = {sigmoid(s.raw[1]), sigmoid(s.raw[2]), sigmoid(s.raw[3])};
  return out;
}

void RadianceField::query_batch(std::span<const Vec3> points, std::span<FieldSample> out) const {
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = query(points[i]);
}

void RadianceField::output_grad(std::span<const double> raw, double d_density,
                                const Vec3& d_color, bool inside,
                                std::span<double> d_raw) const {
  // softplus' = sigmoid, sigmoid' = s (1 - s).
  d_raw[0] = inside ? d_density * sigmoid(raw[0] + config_.density_bias) : 0.0;
  for (int c = 0; c < 3; ++c) {
    const double s = sigmoid(raw[static_cast<std::size_t>(c) + 1]);
    d_raw[static_cast<std::size_t>(c) + 1] = d_color[c] * s * (1.0 - s);
  }
}

void RadianceField::backward_mlp(const Vec3& p, double d_density, const Vec3& d_color,
                                 std::span<double> mlp_grad,
                                 std::span<double> d_features) const {
  const auto fdim = static_cast<std::size_t>(config_.grid.feature_dim());
  Scratch& s = scratch_for(fdim, mlp_.scratch_size());
  std::span<double> feats(s.features.data(), fdim);
  raw_forward(p, feats, s.raw, s.mlp);
  output_grad(s.raw, d_density, d_color, !is_exterior(p), s.d_raw);
  mlp_.backward(mlp_params_, feats, s.d_raw, s.mlp, mlp_grad, d_features);
}

void RadianceField::backward(const Vec3& p, double d_density, const Vec3& d_color,
                             FieldGradient& grad) const {
  const auto fdim = static_cast<std::size_t>(config_.grid.feature_dim());
  Scratch& s = scratch_for(fdim, mlp_.scratch_size());
  std::span<double> dfeat(s.d_features.data(), fdim);
  backward_mlp(p, d_density, d_color, grad.mlp, dfeat);
  encoder_.backward(p, dfeat, grad.grid);
}

Vec3 RadianceField::position_gradient(const Vec3& p, double d_density,
                                      const Vec3& d_color) const {
  const auto fdim = static_cast<std::size_t>(config_.grid.feature_dim());
  Scratch& s = scratch_for(fdim, mlp_.scratch_size());
  std::span<double> dfeat(s.d_features.data(), fdim);
  std::vector<double> unused(mlp_params_.size(), 0.0);
  backward_mlp(p, d_density, d_color, unused, dfeat);
  return encoder_.position_gradient(p, grid_, dfeat);
}

bool RadianceField::operator==(const RadianceField& other) const {
  return config_.to_text() == other.config_.to_text() && grid_ == other.grid_ &&
         mlp_params_ == other.mlp_params_;
}

}  // namespace dnf
