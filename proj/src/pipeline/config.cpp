// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/pipeline/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dnf {

namespace pt = boost::property_tree;

Camera InputsConfig::reference_camera() const {
  return make_orbit_camera(reference_pose, fov_y, resolution, resolution, scene_radius);
}

OracleKind parse_oracle_kind(const std::string& name) {
  if (name == "synthetic") return OracleKind::kSynthetic;
  if (name == "remote") return OracleKind::kRemote;
  if (name == "hostile") return OracleKind::kHostile;
  throw ConfigError("oracle.kind: unknown oracle kind '" + name +
                    "' (expected synthetic, remote or hostile)");
}

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::kSynthetic:
      return "synthetic";
    case OracleKind::kRemote:
      return "remote";
    case OracleKind::kHostile:
      return "hostile";
  }
  return "unknown";
}

namespace {

constexpr double kDeg = kPi / 180.0;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt(const Vec3& v) { return fmt(v.x) + " " + fmt(v.y) + " " + fmt(v.z); }

// Typed lookups that remember which keys were consumed.
class Reader {
 public:
  explicit Reader(const pt::ptree& root) : root_(root) {}

  std::optional<std::string> raw(const std::string& path) {
    used_.insert(path);
    const auto v = root_.get_optional<std::string>(pt::ptree::path_type(path, '.'));
    if (!v) return std::nullopt;
    return *v;
  }

  void get(const std::string& path, std::string& out) {
    if (auto v = raw(path)) out = *v;
  }
  void get(const std::string& path, int& out) {
    if (auto v = raw(path)) out = parse<int>(path, *v);
  }
  void get(const std::string& path, std::uint64_t& out) {
    if (auto v = raw(path)) out = parse<std::uint64_t>(path, *v);
  }
  void get(const std::string& path, double& out) {
    if (auto v = raw(path)) out = parse<double>(path, *v);
  }
  void get(const std::string& path, bool& out) {
    if (auto v = raw(path)) {
      if (*v == "true" || *v == "1" || *v == "yes") {
        out = true;
      } else if (*v == "false" || *v == "0" || *v == "no") {
        out = false;
      } else {
        throw ConfigError("config key '" + path + "': expected a boolean, got '" + *v + "'");
      }
    }
  }
  void get(const std::string& path, Vec3& out) {
    if (auto v = raw(path)) {
      std::istringstream in(*v);
      Vec3 r;
      std::string rest;
      if (!(in >> r.x >> r.y >> r.z) || (in >> rest)) {
        throw ConfigError("config key '" + path + "': expected three numbers, got '" + *v + "'");
      }
      out = r;
    }
  }
  void degrees(const std::string& path, double& radians) {
    double deg = radians / kDeg;
    get(path, deg);
    radians = deg * kDeg;
  }
  template <typename E, typename ParseFn>
  void get_enum(const std::string& path, E& out, ParseFn parse_fn) {
    if (auto v = raw(path)) {
      try {
        out = parse_fn(*v);
      } catch (const ConfigError& e) {
        throw ConfigError("config key '" + path + "': " + e.what());
      }
    }
  }
  std::string require(const std::string& path) {
    auto v = raw(path);
    if (!v || v->empty()) throw ConfigError("missing required config key '" + path + "'");
    return *v;
  }

  void reject_unknown() const {
    for (const auto& [name, node] : root_) {
      if (node.empty()) {
        if (!used_.count(name)) throw ConfigError("unknown config key '" + name + "'");
        continue;
      }
      for (const auto& [key, leaf] : node) {
        const std::string path = name + "." + key;
        if (!used_.count(path)) throw ConfigError("unknown config key '" + path + "'");
      }
    }
  }

 private:
  template <typename T>
  static T parse(const std::string& path, const std::string& text) {
    std::istringstream in(text);
    T v{};
    std::string rest;
    if (!(in >> v) || (in >> rest)) {
      throw ConfigError("config key '" + path + "': cannot parse '" + text + "'");
    }
    return v;
  }

  const pt::ptree& root_;
  std::set<std::string> used_;
};

std::vector<Blob> parse_blobs(const std::string& text) {
  std::vector<Blob> blobs;
  std::istringstream all(text);
  for (std::string item; std::getline(all, item, ';');) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream in(item);
    Blob b;
    if (!(in >> b.center.x >> b.center.y >> b.center.z >> b.radius)) {
      throw ConfigError("config key 'inputs.blobs': expected 'x y z radius [r g b]', got '" +
                        item + "'");
    }
    Vec3 c;
    if (in >> c.x >> c.y >> c.z) b.color = c;
    blobs.push_back(b);
  }
  return blobs;
}

std::string blobs_text(const std::vector<Blob>& blobs) {
  std::string out;
  for (const Blob& b : blobs) {
    if (!out.empty()) out += "; ";
    out += fmt(b.center) + " " + fmt(b.radius) + " " + fmt(b.color);
  }
  return out;
}

void read_stage(Reader& r, const std::string& s, StagePlan& p) {
  r.get(s + ".iterations", p.iterations);
  if (auto v = r.raw(s + ".losses")) {
    try {
      p.losses = parse_loss_set(*v);
    } catch (const ConfigError& e) {
      throw ConfigError("config key '" + s + ".losses': " + e.what());
    }
  }
  r.get(s + ".lambda_rgb", p.weights.rgb);
  r.get(s + ".lambda_mask", p.weights.mask);
  r.get(s + ".lambda_depth", p.weights.depth);
  r.get(s + ".lambda_normal", p.weights.normal);
  r.get(s + ".lambda_reg", p.weights.reg);
  r.get(s + ".lambda_sds", p.weights.sds);
  r.get(s + ".reference_fraction", p.cameras.reference_fraction);
  r.get(s + ".radius_min", p.cameras.radius_min);
  r.get(s + ".radius_max", p.cameras.radius_max);
  r.degrees(s + ".polar_min_deg", p.cameras.polar_min);
  r.degrees(s + ".polar_max_deg", p.cameras.polar_max);
  r.degrees(s + ".azimuth_min_deg", p.cameras.azimuth_min);
  r.degrees(s + ".azimuth_max_deg", p.cameras.azimuth_max);
  r.get(s + ".resolution", p.resolution);
  r.get(s + ".samples_per_ray", p.samples_per_ray);
  r.get(s + ".adapt_every", p.adapt_every);
  r.get(s + ".reg_threshold", p.reg_threshold);
  r.get(s + ".random_background", p.random_background);
  r.get(s + ".lr_grid", p.adam.lr_grid);
  r.get(s + ".lr_mlp", p.adam.lr_mlp);
  r.get(s + ".beta1", p.adam.beta1);
  r.get(s + ".beta2", p.adam.beta2);
}

void write_stage(std::ostream& os, const std::string& s, const StagePlan& p) {
  os << "\n[" << s << "]\n";
  os << "iterations = " << p.iterations << "\n";
  os << "losses = " << to_string(p.losses) << "\n";
  os << "lambda_rgb = " << fmt(p.weights.rgb) << "\n";
  os << "lambda_mask = " << fmt(p.weights.mask) << "\n";
  os << "lambda_depth = " << fmt(p.weights.depth) << "\n";
  os << "lambda_normal = " << fmt(p.weights.normal) << "\n";
  os << "lambda_reg = " << fmt(p.weights.reg) << "\n";
  os << "lambda_sds = " << fmt(p.weights.sds) << "\n";
  os << "reference_fraction = " << fmt(p.cameras.reference_fraction) << "\n";
  os << "radius_min = " << fmt(p.cameras.radius_min) << "\n";
  os << "radius_max = " << fmt(p.cameras.radius_max) << "\n";
  os << "polar_min_deg = " << fmt(p.cameras.polar_min / kDeg) << "\n";
  os << "polar_max_deg = " << fmt(p.cameras.polar_max / kDeg) << "\n";
  os << "azimuth_min_deg = " << fmt(p.cameras.azimuth_min / kDeg) << "\n";
  os << "azimuth_max_deg = " << fmt(p.cameras.azimuth_max / kDeg) << "\n";
  os << "resolution = " << p.resolution << "\n";
  os << "samples_per_ray = " << p.samples_per_ray << "\n";
  os << "adapt_every = " << p.adapt_every << "\n";
  os << "reg_threshold = " << fmt(p.reg_threshold) << "\n";
  os << "random_background = " << (p.random_background ? "true" : "false") << "\n";
  os << "lr_grid = " << fmt(p.adam.lr_grid) << "\n";
  os << "lr_mlp = " << fmt(p.adam.lr_mlp) << "\n";
  os << "beta1 = " << fmt(p.adam.beta1) << "\n";
  os << "beta2 = " << fmt(p.adam.beta2) << "\n";
}

template <typename Fn>
void keyed(const std::string& section, Fn fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("config key", 0) == 0 || msg.rfind("missing", 0) == 0) throw;
    throw ConfigError("[" + section + "] " + msg);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (threads < 1) throw ConfigError("config key 'threads': must be >= 1");
  keyed("inputs", [&] { inputs.scene.validate(); });
  if (inputs.resolution < 16) throw ConfigError("config key 'inputs.resolution': must be >= 16");
  if (!(inputs.fov_y > 0.0 && inputs.fov_y < kPi)) {
    throw ConfigError("config key 'inputs.fov_deg': must lie in (0, 180)");
  }
  if (!(inputs.scene_radius > 0.0)) throw ConfigError("config key 'inputs.scene_radius': must be > 0");
  if (!(inputs.reference_pose.radius > inputs.scene_radius)) {
    throw ConfigError("config key 'inputs.camera_radius': camera must sit outside scene_radius");
  }
  if (!(stage1.cameras.radius_min > inputs.scene_radius) ||
      !(stage2.cameras.radius_min > inputs.scene_radius)) {
    throw ConfigError("config key 'radius_min': orbit cameras must sit outside scene_radius");
  }
  keyed("field", [&] { field.validate(); });
  keyed("stage1", [&] { stage1.validate(); });
  keyed("stage2", [&] { stage2.validate(); });
  if (oracle.num_steps < 2) throw ConfigError("config key 'oracle.num_steps': must be >= 2");
  if (oracle.kind == OracleKind::kRemote && oracle.url.empty()) {
    throw ConfigError("missing required config key 'oracle.url' (or set DNF_ORACLE_URL)");
  }
  if (oracle.kind != OracleKind::kRemote && !inputs.scene.has_ground_truth()) {
    throw ConfigError("config key 'oracle.kind': synthetic oracles need an analytic scene");
  }
  if (!(oracle.adapter_lr > 0.0)) throw ConfigError("config key 'oracle.adapter_lr': must be > 0");
  if (!(oracle.timeout_seconds > 0.0)) throw ConfigError("config key 'oracle.timeout': must be > 0");
  if (output.dir.empty()) throw ConfigError("missing required config key 'output.dir'");
  if (output.eval_every < 0 || output.eval_views < 1 || output.contact_views < 1) {
    throw ConfigError("config key 'output.eval_every/eval_views/contact_views': out of range");
  }
  if (output.mesh_resolution != 0 && output.mesh_resolution < 8) {
    throw ConfigError("config key 'output.mesh_resolution': must be 0 or >= 8");
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "seed = " << seed << "\n";
  os << "threads = " << threads << "\n";
  os << "\n[inputs]\n";
  os << "scene = " << to_string(inputs.scene.kind) << "\n";
  os << "radius = " << fmt(inputs.scene.radius) << "\n";
  os << "density = " << fmt(inputs.scene.density) << "\n";
  os << "albedo = " << fmt(inputs.scene.albedo) << "\n";
  os << "blobs = " << blobs_text(inputs.scene.blobs) << "\n";
  os << "image = " << inputs.scene.image_path << "\n";
  os << "mask = " << inputs.scene.mask_path << "\n";
  os << "depth = " << inputs.scene.depth_path << "\n";
  os << "camera_radius = " << fmt(inputs.reference_pose.radius) << "\n";
  os << "camera_polar_deg = " << fmt(inputs.reference_pose.polar / kDeg) << "\n";
  os << "camera_azimuth_deg = " << fmt(inputs.reference_pose.azimuth / kDeg) << "\n";
  os << "fov_deg = " << fmt(inputs.fov_y / kDeg) << "\n";
  os << "resolution = " << inputs.resolution << "\n";
  os << "scene_radius = " << fmt(inputs.scene_radius) << "\n";
  os << "\n[field]\n" << field.to_text();
  write_stage(os, "stage1", stage1);
  write_stage(os, "stage2", stage2);
  os << "\n[oracle]\n";
  os << "kind = " << to_string(oracle.kind) << "\n";
  os << "url = " << oracle.url << "\n";
  os << "schedule = " << to_string(oracle.profile) << "\n";
  os << "num_steps = " << oracle.num_steps << "\n";
  os << "weighting = " << to_string(oracle.weighting) << "\n";
  os << "guidance_scale = " << fmt(oracle.guidance_scale) << "\n";
  os << "prompt = " << oracle.prompt << "\n";
  os << "adapter_lr = " << fmt(oracle.adapter_lr) << "\n";
  os << "guide_with_adapter = " << (oracle.guide_with_adapter ? "true" : "false") << "\n";
  os << "hostile_after = " << oracle.hostile_after << "\n";
  os << "timeout = " << fmt(oracle.timeout_seconds) << "\n";
  os << "\n[output]\n";
  os << "dir = " << output.dir.string() << "\n";
  os << "eval_every = " << output.eval_every << "\n";
  os << "eval_views = " << output.eval_views << "\n";
  os << "contact_views = " << output.contact_views << "\n";
  os << "mesh_resolution = " << output.mesh_resolution << "\n";
  return os.str();
}

RunConfig desk_scale_config(SceneKind kind) {
  RunConfig c;
  c.inputs.scene.kind = kind;
  c.field.grid.num_levels = 8;
  c.field.grid.base_resolution = 8;
  c.field.grid.max_resolution = 128;
  c.field.grid.table_size_log2 = 15;
  c.field.mlp.hidden_width = 16;
  for (StagePlan* p : {&c.stage1, &c.stage2}) {
    p->resolution = 64;
    p->samples_per_ray = 32;
  }
  return c;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  Reader r(root);
  RunConfig c;
  r.get("seed", c.seed);
  r.get("threads", c.threads);

  InputsConfig& in = c.inputs;
  const std::string scene = r.require("inputs.scene");
  try {
    in.scene.kind = parse_scene_kind(scene);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config key 'inputs.scene': ") + e.what());
  }
  r.get("inputs.radius", in.scene.radius);
  r.get("inputs.density", in.scene.density);
  r.get("inputs.albedo", in.scene.albedo);
  if (auto v = r.raw("inputs.blobs")) in.scene.blobs = parse_blobs(*v);
  auto path = [&](const std::string& key, std::string& out) {
    r.get(key, out);
    if (!out.empty() && std::filesystem::path(out).is_relative() && !base_dir.empty()) {
      out = (base_dir / out).lexically_normal().string();
    }
  };
  path("inputs.image", in.scene.image_path);
  path("inputs.mask", in.scene.mask_path);
  path("inputs.depth", in.scene.depth_path);
  r.get("inputs.camera_radius", in.reference_pose.radius);
  r.degrees("inputs.camera_polar_deg", in.reference_pose.polar);
  r.degrees("inputs.camera_azimuth_deg", in.reference_pose.azimuth);
  r.degrees("inputs.fov_deg", in.fov_y);
  r.get("inputs.resolution", in.resolution);
  r.get("inputs.scene_radius", in.scene_radius);

  HashGridConfig& g = c.field.grid;
  r.get("field.num_levels", g.num_levels);
  r.get("field.base_resolution", g.base_resolution);
  r.get("field.max_resolution", g.max_resolution);
  r.get("field.features_per_level", g.features_per_level);
  r.get("field.table_size_log2", g.table_size_log2);
  r.get("field.bbox_min", g.bounding_box.lo);
  r.get("field.bbox_max", g.bounding_box.hi);
  r.get("field.hidden_layers", c.field.mlp.hidden_layers);
  r.get("field.hidden_width", c.field.mlp.hidden_width);
  r.get("field.density_bias", c.field.density_bias);

  read_stage(r, "stage1", c.stage1);
  read_stage(r, "stage2", c.stage2);

  OracleConfig& o = c.oracle;
  r.get_enum("oracle.kind", o.kind, parse_oracle_kind);
  r.get("oracle.url", o.url);
  r.get_enum("oracle.schedule", o.profile, parse_schedule_profile);
  r.get("oracle.num_steps", o.num_steps);
  r.get_enum("oracle.weighting", o.weighting, parse_timestep_weighting);
  r.get("oracle.guidance_scale", o.guidance_scale);
  r.get("oracle.prompt", o.prompt);
  r.get("oracle.adapter_lr", o.adapter_lr);
  r.get("oracle.guide_with_adapter", o.guide_with_adapter);
  r.get("oracle.hostile_after", o.hostile_after);
  r.get("oracle.timeout", o.timeout_seconds);

  std::string dir = r.require("output.dir");
  if (std::filesystem::path(dir).is_relative() && !base_dir.empty()) {
    dir = (base_dir / dir).lexically_normal().string();
  }
  c.output.dir = dir;
  r.get("output.eval_every", c.output.eval_every);
  r.get("output.eval_views", c.output.eval_views);
  r.get("output.contact_views", c.output.contact_views);
  r.get("output.mesh_resolution", c.output.mesh_resolution);

  r.reject_unknown();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.parent_path());
}

void apply_environment(RunConfig& config) {
  if (const char* url = std::getenv("DNF_ORACLE_URL"); url != nullptr && *url != '\0') {
    config.oracle.url = url;
  }
}

}  // namespace dnf
