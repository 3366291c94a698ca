// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/pipeline/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "dnf/field/checkpoint.hpp"
#include "dnf/io/image_io.hpp"
#include "dnf/pipeline/scene.hpp"

namespace dnf {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

NoiseSchedule make_run_schedule(const OracleConfig& oracle) {
  return build_schedule(oracle.num_steps, oracle.profile, oracle.weighting);
}

namespace {

Image binarize(Image mask) {
  if (mask.channels == 3) {
    Image gray(mask.width, mask.height, 1);
    for (std::size_t i = 0; i < gray.data.size(); ++i) gray.data[i] = mask.data[i * 3];
    mask = std::move(gray);
  }
  for (double& v : mask.data) v = v >= 0.5 ? 1.0 : 0.0;
  return mask;
}

Image first_channel(const Image& img) {
  if (img.channels == 1) return img;
  Image out(img.width, img.height, 1);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = img.data[i * static_cast<std::size_t>(img.channels)];
  }
  return out;
}

}  // namespace

ReferenceBundle load_reference(const RunConfig& config) {
  const InputsConfig& in = config.inputs;
  if (in.scene.has_ground_truth()) {
    RenderOptions opts;
    opts.samples_per_ray = config.stage1.samples_per_ray;
    opts.threads = config.threads;
    opts.compute_normals = false;
    return make_reference(in.scene, in.reference_camera(), opts);
  }
  ReferenceBundle ref;
  ref.image = read_png(in.scene.image_path);
  if (ref.image.channels != 3) throw FormatError(in.scene.image_path + ": reference image must be RGB");
  ref.mask = binarize(read_png(in.scene.mask_path));
  const std::filesystem::path depth_path = in.scene.depth_path;
  ref.depth = depth_path.extension() == ".png" ? first_channel(read_png(depth_path))
                                               : first_channel(read_raster(depth_path));
  ref.camera = make_orbit_camera(in.reference_pose, in.fov_y, ref.image.width, ref.image.height,
                                 in.scene_radius);
  try {
    ref.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("reference inputs: ") + e.what());
  }
  return ref;
}

std::vector<Camera> heldout_cameras(const InputsConfig& inputs, int count, int resolution) {
  std::vector<Camera> out;
  for (int k = 0; k < count; ++k) {
    SphericalPose pose = inputs.reference_pose;
    pose.azimuth += (k + 0.5) * 2.0 * kPi / count;
    out.push_back(make_orbit_camera(pose, inputs.fov_y, resolution, resolution, inputs.scene_radius));
  }
  return out;
}

std::vector<Camera> turntable_cameras(const InputsConfig& inputs, int count, int resolution) {
  std::vector<Camera> out;
  for (int k = 0; k < count; ++k) {
    SphericalPose pose = inputs.reference_pose;
    pose.azimuth += k * 2.0 * kPi / count;
    out.push_back(make_orbit_camera(pose, inputs.fov_y, resolution, resolution, inputs.scene_radius));
  }
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["psnr"] = psnr;
  j["iou"] = iou;
  j["depth_corr"] = depth_corr;
  j["hausdorff"] = hausdorff ? nlohmann::ordered_json(*hausdorff) : nlohmann::ordered_json(nullptr);
  j["off_component_opacity"] = off_component_opacity;
  return j.dump();
}

double run_iso_level(const RunConfig& config) {
  return default_iso_level(2.0 * config.inputs.scene_radius / config.stage2.samples_per_ray);
}

EvalReport evaluate(const VolumeField& field, const RunConfig& config, const EvalOptions& options) {
  const SceneSpec& spec = config.inputs.scene;
  if (!spec.has_ground_truth()) throw ConfigError("evaluation needs an analytic scene");
  if (options.views < 1) throw ConfigError("evaluation needs at least one view");
  const AnalyticScene truth(spec, true);
  RenderOptions opts;
  opts.samples_per_ray = options.samples_per_ray;
  opts.jitter = false;
  opts.threads = options.threads;
  opts.compute_normals = false;

  EvalReport report;
  const auto cams = heldout_cameras(config.inputs, options.views, options.resolution);
  for (const Camera& cam : cams) {
    const RenderOutput got = render_view(field, cam, opts);
    const RenderOutput want = render_view(truth, cam, opts);
    const Image mask = truth.silhouette(cam);
    report.psnr += psnr(got.color, want.color);
    report.iou += mask_iou(got.opacity, mask);
    ReferenceBundle gt;
    gt.image = want.color;
    gt.mask = mask;
    gt.depth = want.depth;
    gt.camera = cam;
    report.depth_corr += 1.0 - 2.0 * depth_pearson_loss(got.depth, gt).value;
    report.off_component_opacity += off_component_opacity(got.opacity);
  }
  const double n = static_cast<double>(cams.size());
  report.psnr /= n;
  report.iou /= n;
  report.depth_corr /= n;
  report.off_component_opacity /= n;
  if (options.mesh_resolution > 0) {
    const TriangleMesh mesh = extract_mesh(field, options.mesh_resolution, run_iso_level(config),
                                           config.field.grid.bounding_box);
    if (!mesh.empty()) {
      report.hausdorff = hausdorff_distance(mesh, truth.surface_samples(4000),
                                            [&](const Vec3& p) { return truth.surface_distance(p); });
    }
  }
  return report;
}

namespace {

class MetricsLog {
 public:
  explicit MetricsLog(const std::filesystem::path& dir) {
    if (!dir.empty()) {
      out_.open(dir / "metrics.jsonl");
      if (!out_) throw std::runtime_error("cannot write " + (dir / "metrics.jsonl").string());
    }
  }
  void write(const StepRecord& rec) {
    if (out_.is_open()) out_ << rec.to_json() << '\n' << std::flush;
  }

 private:
  std::ofstream out_;
};

void write_sheet(const RadianceField& field, const RunConfig& config, const std::filesystem::path& path) {
  RenderOptions opts;
  opts.samples_per_ray = config.stage2.samples_per_ray;
  opts.jitter = false;
  opts.threads = config.threads;
  opts.compute_normals = false;
  std::vector<Image> tiles;
  for (const Camera& cam : turntable_cameras(config.inputs, config.output.contact_views,
                                             config.inputs.resolution)) {
    tiles.push_back(render_view(field, cam, opts).color);
  }
  write_png(path, contact_sheet(tiles, 4, 1.0));
}

}  // namespace

RunResult run_pipeline(const RunConfig& config, OracleSet* oracles, const RunHooks& hooks) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path& dir = config.output.dir;
  if (!dir.empty()) std::filesystem::create_directories(dir);

  const NoiseSchedule schedule = make_run_schedule(config.oracle);
  OracleSet owned;
  if (oracles == nullptr) {
    owned = make_oracles(config, schedule);
    oracles = &owned;
  }
  const ReferenceBundle ref = load_reference(config);
  const std::string echo = config.to_text();

  RunResult result{RadianceField(config.field, derive_seed(config.seed, 0)), {}, {}, {}, 0.0};
  RadianceField& field = result.field;
  MetricsLog log(dir);

  StepContext ctx;
  ctx.schedule = &schedule;
  ctx.threads = config.threads;
  ctx.scene_radius = config.inputs.scene_radius;
  ctx.prompt = config.oracle.prompt;
  ctx.guidance_scale = config.oracle.guidance_scale;
  ctx.guide_with_adapter = config.oracle.guide_with_adapter;

  const bool can_eval = config.inputs.scene.has_ground_truth() && config.output.eval_every > 0;
  EvalOptions eval_opts;
  eval_opts.views = config.output.eval_views;
  eval_opts.resolution = config.inputs.resolution;
  eval_opts.samples_per_ray = config.stage2.samples_per_ray;
  eval_opts.threads = config.threads;

  int global = 0;
  auto run_stage = [&](int stage) {
    const StagePlan& plan = stage == 1 ? config.stage1 : config.stage2;
    GuidanceOracle& oracle = stage == 1 ? *oracles->geometry : *oracles->texture;
    FieldOptimizer optimizer(field, plan.adam);
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(stage)));
    const auto stage_start = std::chrono::steady_clock::now();
    for (int it = 1; it <= plan.iterations; ++it) {
      StepRecord rec;
      try {
        rec = stage == 1 ? stage1_step(field, ref, oracle, plan, optimizer, rng, ctx, it)
                         : stage2_step(field, &ref, oracle, plan, optimizer, rng, ctx, it);
      } catch (const NumericalError&) {
        if (!dir.empty()) save_checkpoint(dir / "last_good.dnf", field, echo);
        throw;
      }
      rec.global_iteration = ++global;
      rec.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - stage_start).count();
      if (can_eval && (it % config.output.eval_every == 0 || it == plan.iterations)) {
        const EvalReport r = evaluate(field, config, eval_opts);
        rec.heldout_psnr = r.psnr;
        rec.heldout_iou = r.iou;
      }
      if (hooks.on_step) hooks.on_step(rec, field);
      log.write(rec);
      result.records.push_back(std::move(rec));
    }
  };

  run_stage(1);
  if (config.inputs.scene.has_ground_truth()) result.after_stage1 = evaluate(field, config, eval_opts);
  if (!dir.empty()) {
    save_checkpoint(dir / "stage1.dnf", field, echo);
    if (config.output.contact_views > 0) write_sheet(field, config, dir / "stage1.png");
  }
  if (hooks.after_stage1) hooks.after_stage1(field);

  run_stage(2);
  if (config.inputs.scene.has_ground_truth()) result.after_stage2 = evaluate(field, config, eval_opts);
  if (!dir.empty()) {
    save_checkpoint(dir / "stage2.dnf", field, echo);
    if (config.output.contact_views > 0) write_sheet(field, config, dir / "stage2.png");
    if (config.output.mesh_resolution > 0) {
      save_obj(dir / "mesh.obj", extract_mesh(field, config.output.mesh_resolution,
                                              run_iso_level(config), config.field.grid.bounding_box));
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace dnf
