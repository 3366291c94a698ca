// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. stdout carries one JSON document per command;
// diagnostics go to stderr.
//
// Exit codes: 0 success, 1 configuration or input-format error, 2 oracle
// unreachable or misbehaving, 3 numerical failure (NaN/Inf detected),
// 4 any other I/O or internal failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <fstream>
#include <optional>

#include "dnf/field/checkpoint.hpp"
#include "dnf/io/image_io.hpp"
#include "dnf/pipeline/config.hpp"
#include "dnf/pipeline/mesh.hpp"
#include "dnf/pipeline/run.hpp"
#include "dnf/pipeline/scene.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kOracle = 2, kNumerical = 3, kInternal = 4 };

void emit(const ordered_json& j) { std::cout << j.dump(2) << std::endl; }

ordered_json eval_json(const dnf::EvalReport& r) { return ordered_json::parse(r.to_json()); }

// Run configuration stored in a checkpoint, if it parses.
std::optional<dnf::RunConfig> echoed_config(const dnf::Checkpoint& ckpt) {
  if (ckpt.run_config.empty()) return std::nullopt;
  try {
    return dnf::parse_run_config(ckpt.run_config);
  } catch (const dnf::ConfigError& e) {
    std::cerr << "warning: ignoring unreadable config echo in checkpoint: " << e.what() << "\n";
    return std::nullopt;
  }
}

struct GenerateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
};

int cmd_generate(const GenerateArgs& a) {
  dnf::RunConfig config = dnf::load_run_config(a.config);
  dnf::apply_environment(config);
  if (a.seed) config.seed = *a.seed;
  if (!a.out.empty()) config.output.dir = a.out;
  if (a.threads) config.threads = *a.threads;

  std::cerr << "generate: " << config.stage1.iterations << " + " << config.stage2.iterations
            << " iterations, output in " << config.output.dir << "\n";
  dnf::RunHooks hooks;
  hooks.on_step = [](const dnf::StepRecord& rec, const dnf::RadianceField&) {
    if (rec.heldout_psnr) {
      std::cerr << "stage " << rec.stage << " iteration " << rec.iteration << ": held-out psnr "
                << *rec.heldout_psnr << " iou " << rec.heldout_iou.value_or(0.0) << "\n";
    }
  };
  const dnf::RunResult result = dnf::run_pipeline(config, nullptr, hooks);

  ordered_json j;
  j["status"] = "ok";
  j["iterations"] = result.records.size();
  j["seconds"] = result.seconds;
  j["stage1"] = result.after_stage1 ? eval_json(*result.after_stage1) : ordered_json(nullptr);
  j["stage2"] = result.after_stage2 ? eval_json(*result.after_stage2) : ordered_json(nullptr);
  const fs::path& dir = config.output.dir;
  j["checkpoints"] = {(dir / "stage1.dnf").string(), (dir / "stage2.dnf").string()};
  j["metrics"] = (dir / "metrics.jsonl").string();
  emit(j);
  return kOk;
}

struct RenderArgs {
  std::string checkpoint;
  int views = 8;
  int resolution = 64;
  int samples = 64;
  std::string out;
  int threads = 1;
};

int cmd_render(const RenderArgs& a) {
  const dnf::Checkpoint ckpt = dnf::load_checkpoint(a.checkpoint);
  const auto echo = echoed_config(ckpt);
  const dnf::InputsConfig inputs = echo ? echo->inputs : dnf::InputsConfig{};
  fs::create_directories(a.out);

  dnf::RenderOptions opts;
  opts.samples_per_ray = a.samples;
  opts.jitter = false;
  opts.threads = a.threads;
  opts.compute_normals = false;
  ordered_json files = ordered_json::array();
  const auto cams = dnf::turntable_cameras(inputs, a.views, a.resolution);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "view_%03zu", i);
    const dnf::RenderOutput out = dnf::render_view(ckpt.field, cams[i], opts);
    const fs::path png = fs::path(a.out) / (std::string(stem) + ".png");
    const fs::path depth = fs::path(a.out) / (std::string(stem) + "_depth.dnfd");
    const fs::path opacity = fs::path(a.out) / (std::string(stem) + "_opacity.dnfd");
    dnf::write_png(png, out.color);
    dnf::write_raster(depth, out.depth);
    dnf::write_raster(opacity, out.opacity);
    double coverage = 0.0;
    for (double v : out.opacity.data) coverage += v > 0.5 ? 1.0 : 0.0;
    files.push_back({{"image", png.string()},
                     {"depth", depth.string()},
                     {"opacity", opacity.string()},
                     {"azimuth_deg", cams[i].pose.azimuth * 180.0 / dnf::kPi},
                     {"coverage", coverage / static_cast<double>(out.opacity.pixel_count())}});
  }
  emit({{"status", "ok"}, {"views", files}});
  return kOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  int views = 4;
  int resolution = 64;
  int samples = 64;
  int mesh_resolution = 48;
  int threads = 1;
};

int cmd_eval(const EvalArgs& a) {
  const dnf::Checkpoint ckpt = dnf::load_checkpoint(a.checkpoint);
  std::optional<dnf::RunConfig> config;
  if (!a.config.empty()) {
    config = dnf::load_run_config(a.config);
  } else {
    config = echoed_config(ckpt);
  }
  if (!config) throw dnf::ConfigError("eval needs --config: the checkpoint carries no scene");
  dnf::EvalOptions opts;
  opts.views = a.views;
  opts.resolution = a.resolution;
  opts.samples_per_ray = a.samples;
  opts.mesh_resolution = a.mesh_resolution;
  opts.threads = a.threads;
  emit(eval_json(dnf::evaluate(ckpt.field, *config, opts)));
  return kOk;
}

struct MeshArgs {
  std::string checkpoint;
  std::string out;
  int resolution = 64;
  std::optional<double> iso;
};

int cmd_mesh(const MeshArgs& a) {
  const dnf::Checkpoint ckpt = dnf::load_checkpoint(a.checkpoint);
  double iso = 0.0;
  if (a.iso) {
    iso = *a.iso;
  } else {
    const auto echo = echoed_config(ckpt);
    iso = echo ? dnf::run_iso_level(*echo) : dnf::default_iso_level(2.0 / 64.0);
  }
  const dnf::TriangleMesh mesh =
      dnf::extract_mesh(ckpt.field, a.resolution, iso, ckpt.field.config().grid.bounding_box);
  dnf::save_obj(a.out, mesh);
  emit({{"status", "ok"},
        {"path", a.out},
        {"iso_level", iso},
        {"vertices", mesh.vertices.size()},
        {"triangles", mesh.triangles.size()}});
  return kOk;
}

struct SceneArgs {
  std::string kind = "textured-sphere";
  std::string out;
  int resolution = 64;
  bool files = false;
  double radius = 0.5;
};

// Writes a runnable config, plus reference image/mask/depth for --files.
int cmd_scene(const SceneArgs& a) {
  const fs::path dir = a.out;
  fs::create_directories(dir);
  dnf::RunConfig config = dnf::desk_scale_config(dnf::parse_scene_kind(a.kind));
  if (config.inputs.scene.kind == dnf::SceneKind::kFromFiles) {
    throw dnf::ConfigError("scene kind must be analytic; use --files to export reference files");
  }
  config.inputs.scene.radius = a.radius;
  config.inputs.resolution = a.resolution;
  config.stage1.resolution = a.resolution;
  config.stage2.resolution = a.resolution;
  config.output.dir = "run";
  ordered_json j = {{"status", "ok"}};
  if (a.files) {
    const dnf::ReferenceBundle ref = dnf::load_reference(config);
    dnf::write_png(dir / "reference.png", ref.image);
    dnf::write_png(dir / "mask.png", ref.mask);
    dnf::write_raster(dir / "depth.dnfd", ref.depth);
    config.inputs.scene.kind = dnf::SceneKind::kFromFiles;
    config.inputs.scene.image_path = "reference.png";
    config.inputs.scene.mask_path = "mask.png";
    config.inputs.scene.depth_path = "depth.dnfd";
    config.oracle.kind = dnf::OracleKind::kRemote;
    config.oracle.url = "http://127.0.0.1:8765";
    j["reference"] = {(dir / "reference.png").string(), (dir / "mask.png").string(),
                      (dir / "depth.dnfd").string()};
  }
  const fs::path cfg = dir / "config.ini";
  std::ofstream(cfg) << config.to_text();
  j["config"] = cfg.string();
  emit(j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage score-distillation engine for hash-grid radiance fields"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Run geometry then texture optimization");
  generate->add_option("--config", gen.config, "Run configuration (INI)")->required();
  generate->add_option("--seed", gen.seed, "Override the master seed");
  generate->add_option("--out", gen.out, "Override the output directory");
  generate->add_option("--threads", gen.threads, "Render worker threads");

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "Render orbit views of a checkpoint");
  render->add_option("checkpoint", ren.checkpoint)->required();
  render->add_option("--views", ren.views, "Number of views")->check(CLI::PositiveNumber);
  render->add_option("--resolution", ren.resolution)->check(CLI::Range(8, 4096));
  render->add_option("--samples", ren.samples, "Samples per ray")->check(CLI::Range(2, 4096));
  render->add_option("--out", ren.out, "Output directory")->required();
  render->add_option("--threads", ren.threads)->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint against its analytic scene");
  eval->add_option("checkpoint", ev.checkpoint)->required();
  eval->add_option("--config", ev.config, "Scene config (default: the checkpoint's own)");
  eval->add_option("--views", ev.views)->check(CLI::PositiveNumber);
  eval->add_option("--resolution", ev.resolution)->check(CLI::Range(8, 4096));
  eval->add_option("--samples", ev.samples)->check(CLI::Range(2, 4096));
  eval->add_option("--mesh-resolution", ev.mesh_resolution, "0 skips the Hausdorff distance")
      ->check(CLI::NonNegativeNumber);
  eval->add_option("--threads", ev.threads)->check(CLI::PositiveNumber);

  MeshArgs me;
  auto* mesh = app.add_subcommand("mesh", "Extract an OBJ iso-surface from a checkpoint");
  mesh->add_option("checkpoint", me.checkpoint)->required();
  mesh->add_option("--out", me.out, "OBJ path")->required();
  mesh->add_option("--resolution", me.resolution)->check(CLI::Range(8, 1024));
  mesh->add_option("--iso", me.iso, "Density level (default: alpha 0.5 at the run's spacing)");

  SceneArgs sc;
  auto* scene = app.add_subcommand("scene", "Scaffold a synthetic test scene");
  scene->add_option("--kind", sc.kind, "analytic-sphere, analytic-box or textured-sphere");
  scene->add_option("--out", sc.out, "Output directory")->required();
  scene->add_option("--resolution", sc.resolution)->check(CLI::Range(16, 4096));
  scene->add_option("--radius", sc.radius)->check(CLI::PositiveNumber);
  scene->add_flag("--files", sc.files, "Export reference image, mask and depth as from-files inputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (render->parsed()) return cmd_render(ren);
    if (eval->parsed()) return cmd_eval(ev);
    if (mesh->parsed()) return cmd_mesh(me);
    if (scene->parsed()) return cmd_scene(sc);
  } catch (const dnf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const dnf::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kConfig;
  } catch (const dnf::OracleError& e) {
    std::cerr << "oracle error: " << e.what() << "\n";
    return kOracle;
  } catch (const dnf::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
