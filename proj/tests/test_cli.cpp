// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <regex>

#include <json.hpp>

#include "dnf/field/checkpoint.hpp"
#include "dnf/io/image_io.hpp"
#include "dnf/pipeline/run.hpp"
#include "support/fit.hpp"

using namespace dnf;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dnf_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Result run(const std::string& args, const std::string& env = {}) {
  const fs::path err = fs::temp_directory_path() / "dnf_test_cli_stderr.txt";
  const std::string cmd = env + " " + DNF_CLI_PATH + " " + args + " 2>" + err.string();
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

// A scaffolded scene shrunk to run in a couple of seconds.
fs::path tiny_scene(const std::string& name, const std::string& extra = {}) {
  const fs::path dir = scratch(name);
  const Result r = run("scene --out " + dir.string() + " --resolution 16");
  REQUIRE(r.code == 0);
  std::string text = slurp(dir / "config.ini");
  auto set = [&](const std::string& key, const std::string& value) {
    text = std::regex_replace(text, std::regex("(^|\n)" + key + " = [^\n]*"), "$1" + key + " = " + value);
  };
  set("num_levels", "4");
  set("base_resolution", "4");
  set("max_resolution", "32");
  set("table_size_log2", "10");
  set("hidden_width", "8");
  set("samples_per_ray", "12");
  set("iterations", "3");
  set("eval_every", "0");
  set("contact_views", "2");
  std::ofstream(dir / "config.ini") << text << extra;
  return dir;
}

}  // namespace

TEST_CASE("usage and configuration errors exit with 1") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  const Result missing = run("generate --config /nonexistent/config.ini");
  CHECK(missing.code == 1);
  CHECK(missing.out.empty());

  const fs::path dir = scratch("badcfg");
  std::ofstream(dir / "a.ini") << "[inputs]\nscene = textured-sphere\n";
  const Result no_dir = run("generate --config " + (dir / "a.ini").string());
  CHECK(no_dir.code == 1);
  CHECK(no_dir.err.find("output.dir") != std::string::npos);

  std::ofstream(dir / "b.ini") << "[inputs]\nscene = textured-sphere\ncolour = red\n[output]\ndir = o\n";
  const Result unknown = run("generate --config " + (dir / "b.ini").string());
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("inputs.colour") != std::string::npos);

  std::ofstream(dir / "bad.dnf") << "not a checkpoint";
  CHECK(run("render " + (dir / "bad.dnf").string() + " --out " + dir.string()).code == 1);
  CHECK(run("eval " + (dir / "bad.dnf").string()).code == 1);
}

TEST_CASE("generate on a sphere scene writes both checkpoints") {
  const fs::path dir = tiny_scene("generate");
  const Result r = run("generate --config " + (dir / "config.ini").string() + " --seed 7");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("status") == "ok");
  CHECK(j.at("iterations") == 6);
  CHECK(fs::exists(dir / "run" / "stage1.dnf"));
  CHECK(fs::exists(dir / "run" / "stage2.dnf"));
  CHECK(fs::exists(dir / "run" / "stage1.png"));
  CHECK(fs::exists(dir / "run" / "metrics.jsonl"));
  CHECK(parse_run_config(load_checkpoint(dir / "run" / "stage2.dnf").run_config).seed == 7);

  // --out redirects every artifact.
  const fs::path other = dir / "elsewhere";
  REQUIRE(run("generate --config " + (dir / "config.ini").string() + " --out " + other.string()).code == 0);
  CHECK(fs::exists(other / "stage2.dnf"));
}

TEST_CASE("NaN guidance exits with 3 and keeps the last good checkpoint") {
  const fs::path dir = tiny_scene("hostile");
  std::string text = slurp(dir / "config.ini");
  text = std::regex_replace(text, std::regex("kind = synthetic"), "kind = hostile");
  text = std::regex_replace(text, std::regex("hostile_after = 0"), "hostile_after = 2");
  std::ofstream(dir / "config.ini") << text;
  const Result r = run("generate --config " + (dir / "config.ini").string());
  CHECK(r.code == 3);
  CHECK(r.out.empty());
  CHECK(r.err.find("stage 1 iteration 3") != std::string::npos);
  CHECK(fs::exists(dir / "run" / "last_good.dnf"));
}

TEST_CASE("unreachable oracle endpoints exit with 2") {
  const fs::path dir = tiny_scene("remote");
  std::string text = slurp(dir / "config.ini");
  text = std::regex_replace(text, std::regex("kind = synthetic"), "kind = remote");
  text = std::regex_replace(text, std::regex("timeout = [^\n]*"), "timeout = 1");
  std::ofstream(dir / "config.ini") << text;
  // The endpoint comes from the environment override.
  const Result r = run("generate --config " + (dir / "config.ini").string(),
                       "DNF_ORACLE_URL=http://127.0.0.1:9");
  CHECK(r.code == 2);
  CHECK(r.err.find("127.0.0.1:9") != std::string::npos);
}

TEST_CASE("render, eval and mesh on a fitted sphere") {
  const fs::path dir = scratch("fitted");
  RunConfig config = desk_scale_config(SceneKind::kAnalyticSphere);
  config.output.dir = dir / "run";
  RadianceField field(config.field, 1);
  const AnalyticScene sphere(config.inputs.scene, false);
  testing::fit_to_field(field, sphere, 300, 256, 2);
  const fs::path ckpt = dir / "sphere.dnf";
  save_checkpoint(ckpt, field, config.to_text());

  SUBCASE("one view gives one PNG") {
    const Result r = run("render " + ckpt.string() + " --views 1 --resolution 24 --out " + (dir / "one").string());
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("views").size() == 1);
    int pngs = 0;
    for (const auto& e : fs::directory_iterator(dir / "one")) pngs += e.path().extension() == ".png";
    CHECK(pngs == 1);
  }

  SUBCASE("eight views all see the sphere, matching in-memory renders") {
    const Result r = run("render " + ckpt.string() + " --views 8 --resolution 24 --samples 32 --out " +
                         (dir / "eight").string());
    REQUIRE(r.code == 0);
    const json views = json::parse(r.out).at("views");
    REQUIRE(views.size() == 8);
    for (const json& v : views) CHECK(v.at("coverage").get<double>() > 0.05);

    const auto cams = turntable_cameras(config.inputs, 8, 24);
    RenderOptions opts;
    opts.samples_per_ray = 32;
    opts.jitter = false;
    opts.compute_normals = false;
    const RenderOutput mem = render_view(field, cams[3], opts);
    const Image disk = read_raster(views[3].at("depth").get<std::string>());
    REQUIRE(disk.same_shape(mem.depth));
    for (std::size_t i = 0; i < disk.data.size(); ++i) {
      CHECK(disk.data[i] == static_cast<float>(mem.depth.data[i]));
    }
  }

  SUBCASE("eval reports the four metrics") {
    const Result r = run("eval " + ckpt.string() + " --views 2 --resolution 24 --mesh-resolution 16");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    for (const char* k : {"psnr", "iou", "depth_corr", "hausdorff"}) CHECK(j.contains(k));
    CHECK(j.at("iou").get<double>() > 0.8);
    CHECK(j.at("hausdorff").is_number());
  }

  SUBCASE("from-files scenes cannot be evaluated") {
    std::ofstream(dir / "files.ini") << "[inputs]\nscene = from-files\n[output]\ndir = o\n";
    const Result r = run("eval " + ckpt.string() + " --config " + (dir / "files.ini").string());
    CHECK(r.code == 1);
  }

  SUBCASE("mesh writes an OBJ") {
    const fs::path obj = dir / "sphere.obj";
    const Result r = run("mesh " + ckpt.string() + " --resolution 24 --out " + obj.string());
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("triangles").get<int>() > 100);
    CHECK(fs::file_size(obj) > 0);
  }
}

TEST_CASE("scene scaffolding exports from-files inputs") {
  const fs::path dir = scratch("scaffold");
  const Result r = run("scene --kind analytic-box --out " + dir.string() + " --resolution 32 --files");
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("reference").size() == 3);
  const RunConfig c = load_run_config(dir / "config.ini");
  CHECK(c.inputs.scene.kind == SceneKind::kFromFiles);
  CHECK(c.oracle.kind == OracleKind::kRemote);
  const ReferenceBundle ref = load_reference(c);
  CHECK(ref.image.width == 32);
  CHECK(run("scene --kind from-files --out " + dir.string()).code == 1);
}
