// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/pipeline/stage.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "dnf/diffusion/sds.hpp"
#include "dnf/render/render.hpp"

namespace dnf {

LossKind parse_loss_kind(const std::string& name) {
  if (name == "sds3d") return LossKind::kSds3d;
  if (name == "sds2d") return LossKind::kSds2d;
  if (name == "rec") return LossKind::kRec;
  if (name == "depth") return LossKind::kDepth;
  if (name == "normal") return LossKind::kNormal;
  if (name == "opacity_reg") return LossKind::kOpacityReg;
  throw ConfigError("unknown loss '" + name +
                    "' (expected sds3d, sds2d, rec, depth, normal or opacity_reg)");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kSds3d:
      return "sds3d";
    case LossKind::kSds2d:
      return "sds2d";
    case LossKind::kRec:
      return "rec";
    case LossKind::kDepth:
      return "depth";
    case LossKind::kNormal:
      return "normal";
    case LossKind::kOpacityReg:
      return "opacity_reg";
  }
  return "unknown";
}

std::set<LossKind> parse_loss_set(const std::string& text) {
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(cleaned);
  std::set<LossKind> out;
  for (std::string name; in >> name;) out.insert(parse_loss_kind(name));
  return out;
}

std::string to_string(const std::set<LossKind>& losses) {
  std::string out;
  for (LossKind k : losses) {
    if (!out.empty()) out += ' ';
    out += to_string(k);
  }
  return out;
}

void CameraPolicy::validate() const {
  if (!(reference_fraction >= 0.0 && reference_fraction <= 1.0)) {
    throw ConfigError("camera policy: reference_fraction must lie in [0, 1]");
  }
  if (!(radius_min > 0.0 && radius_min <= radius_max)) {
    throw ConfigError("camera policy: need 0 < radius_min <= radius_max");
  }
  if (!(polar_min > 0.0 && polar_min <= polar_max && polar_max < kPi)) {
    throw ConfigError("camera policy: need 0 < polar_min <= polar_max < 180 degrees");
  }
  if (!(azimuth_min <= azimuth_max)) throw ConfigError("camera policy: azimuth_min > azimuth_max");
}

SampledCamera sample_camera(const CameraPolicy& policy, const Camera& reference, int resolution,
                            double scene_radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (policy.reference_fraction > 0.0 && u(rng) < policy.reference_fraction) {
    return {reference, true};
  }
  auto lerp = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  SphericalPose pose;
  pose.radius = lerp(policy.radius_min, policy.radius_max);
  pose.polar = lerp(policy.polar_min, policy.polar_max);
  pose.azimuth = lerp(policy.azimuth_min, policy.azimuth_max);
  return {make_orbit_camera(pose, reference.fov_y, resolution, resolution, scene_radius), false};
}

void StagePlan::validate() const {
  if (iterations < 1) throw ConfigError("stage iterations must be >= 1");
  if (resolution < 16) throw ConfigError("stage resolution must be >= 16");
  if (samples_per_ray < 2) throw ConfigError("stage samples_per_ray must be >= 2");
  if (adapt_every < 0) throw ConfigError("stage adapt_every must be >= 0");
  if (!(reg_threshold > 0.0 && reg_threshold < 1.0)) {
    throw ConfigError("stage reg_threshold must lie in (0, 1)");
  }
  weights.validate();
  cameras.validate();
  adam.validate();
}

StagePlan default_stage1_plan() {
  StagePlan p;
  p.iterations = 300;
  p.losses = {LossKind::kSds3d, LossKind::kRec, LossKind::kDepth, LossKind::kNormal};
  p.cameras.reference_fraction = 0.25;
  p.resolution = 256;
  p.samples_per_ray = 64;
  p.adapt_every = 0;
  return p;
}

StagePlan default_stage2_plan() {
  StagePlan p;
  p.iterations = 1000;
  p.losses = {LossKind::kSds2d, LossKind::kOpacityReg};
  p.cameras.reference_fraction = 0.0;
  p.resolution = 256;
  p.samples_per_ray = 64;
  p.adapt_every = 1;
  return p;
}

std::string StepRecord::to_json() const {
  nlohmann::ordered_json j;
  j["stage"] = stage;
  j["iteration"] = iteration;
  j["global_iteration"] = global_iteration;
  nlohmann::ordered_json l = nlohmann::ordered_json::object();
  for (const auto& [name, value] : losses) {
    l[name] = value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
  }
  j["losses"] = l;
  j["timestep"] = timestep;
  j["reference_view"] = reference_view;
  j["grad_norm"] = grad_norm;
  if (adapt_loss) j["adapt_loss"] = *adapt_loss;
  if (heldout_psnr) j["heldout_psnr"] = *heldout_psnr;
  if (heldout_iou) j["heldout_iou"] = *heldout_iou;
  j["seconds"] = seconds;
  return j.dump();
}

namespace {

void add_into(Image& dst, const Image& src, double scale = 1.0) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += scale * src.data[i];
}

std::string where(int stage, int iteration) {
  return "stage " + std::to_string(stage) + " iteration " + std::to_string(iteration) + ": ";
}

StepRecord run_step(int stage, RadianceField& field, const ReferenceBundle* ref,
                    GuidanceOracle& oracle, const StagePlan& plan, FieldOptimizer& optimizer,
                    std::mt19937_64& rng, const StepContext& ctx, int iteration) {
  if (ctx.schedule == nullptr) throw std::invalid_argument("step: missing noise schedule");
  const LossKind sds_kind = stage == 1 ? LossKind::kSds3d : LossKind::kSds2d;
  const bool needs_ref = plan.cameras.reference_fraction > 0.0 || plan.enabled(LossKind::kRec) ||
                         plan.enabled(LossKind::kDepth) || plan.enabled(LossKind::kNormal);
  if (needs_ref && ref == nullptr) {
    throw ConfigError(where(stage, iteration) + "reference losses need a reference bundle");
  }

  StepRecord rec;
  rec.stage = stage;
  rec.iteration = iteration;
  for (LossKind k : plan.losses) rec.losses[to_string(k)] = std::nullopt;

  const Camera base = ref != nullptr ? ref->camera : Camera{};
  const SampledCamera view =
      sample_camera(plan.cameras, base, plan.resolution, ctx.scene_radius, rng);
  rec.reference_view = view.reference;

  RenderOptions opts;
  opts.samples_per_ray = plan.samples_per_ray;
  opts.seed = rng();
  opts.background = ctx.background;
  // Reference views keep the reference image's background.
  if (plan.random_background && !view.reference) {
    const double g = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    opts.background = {g, g, g};
  }
  opts.threads = ctx.threads;
  opts.compute_normals = view.reference && plan.enabled(LossKind::kNormal);
  RenderTape tape;
  const RenderOutput out = render_view(field, view.camera, opts, &tape);
  RenderGrad up = RenderGrad::zeros_like(out);
  const double npix = static_cast<double>(out.color.pixel_count());

  Conditioning cond;
  cond.camera = view.camera;
  cond.prompt = ctx.prompt;
  cond.guidance_scale = ctx.guidance_scale;
  if (opts.background != Vec3{1.0, 1.0, 1.0}) cond.background = opts.background;
  try {
    if (plan.enabled(sds_kind) && plan.weights.sds > 0.0) {
      const DistillResult d = distill(oracle, out.color, cond, *ctx.schedule, rng,
                                      stage == 2 && ctx.guide_with_adapter);
      // Averaged over pixels, like the other image losses.
      add_into(up.color, d.pixel_grad, plan.weights.sds / npix);
      rec.losses[to_string(sds_kind)] = plan.weights.sds * d.loss;
      rec.timestep = d.t;
    }
  } catch (const OracleError& e) {
    throw OracleError(where(stage, iteration) + e.what());
  }

  if (view.reference) {
    if (plan.enabled(LossKind::kRec)) {
      const LossTerm t = reconstruction_loss(out, *ref, plan.weights);
      add_into(up.color, t.d_color);
      add_into(up.opacity, t.d_opacity);
      rec.losses["rec"] = t.value;
    }
    if (plan.enabled(LossKind::kDepth)) {
      const LossTerm t = depth_pearson_loss(out.depth, *ref);
      add_into(up.depth, t.d_depth, plan.weights.depth);
      rec.losses["depth"] = plan.weights.depth * t.value;
    }
    if (plan.enabled(LossKind::kNormal)) {
      const LossTerm t = normal_smoothness_loss(out.normals);
      add_into(up.normals, t.d_normals, plan.weights.normal);
      rec.losses["normal"] = plan.weights.normal * t.value;
    }
  }
  if (plan.enabled(LossKind::kOpacityReg)) {
    const LossTerm t = opacity_regularization(out, plan.reg_threshold);
    add_into(up.weights, t.d_weights, plan.weights.reg);
    rec.losses["opacity_reg"] = plan.weights.reg * t.value;
  }

  FieldGradient grad = field.make_gradient();
  render_backward(field, tape, out, up, grad);
  for (const auto& [name, value] : rec.losses) {
    if (value && !std::isfinite(*value)) {
      throw NumericalError(where(stage, iteration) + "non-finite " + name + " loss");
    }
  }
  if (!grad.all_finite()) throw NumericalError(where(stage, iteration) + "non-finite gradient");
  rec.grad_norm = std::sqrt(grad.squared_norm());
  optimizer.step(field, grad);

  if (stage == 2 && plan.adapt_every > 0 && iteration % plan.adapt_every == 0) {
    try {
      rec.adapt_loss =
          adapt_oracle(oracle, {out.color}, {cond}, *ctx.schedule, rng);
    } catch (const OracleError& e) {
      throw OracleError(where(stage, iteration) + e.what());
    }
  }
  return rec;
}

}  // namespace

StepRecord stage1_step(RadianceField& field, const ReferenceBundle& ref, GuidanceOracle& oracle,
                       const StagePlan& plan, FieldOptimizer& optimizer, std::mt19937_64& rng,
                       const StepContext& ctx, int iteration) {
  if (plan.enabled(LossKind::kSds3d) && !oracle.capabilities().view_conditioned) {
    throw ConfigError("stage 1 needs a view-conditioned oracle");
  }
  return run_step(1, field, &ref, oracle, plan, optimizer, rng, ctx, iteration);
}

StepRecord stage2_step(RadianceField& field, const ReferenceBundle* ref, GuidanceOracle& oracle,
                       const StagePlan& plan, FieldOptimizer& optimizer, std::mt19937_64& rng,
                       const StepContext& ctx, int iteration) {
  if (plan.enabled(LossKind::kSds2d) && !oracle.capabilities().text_conditioned) {
    throw ConfigError("stage 2 needs a text-conditioned oracle");
  }
  return run_step(2, field, ref, oracle, plan, optimizer, rng, ctx, iteration);
}

}  // namespace dnf
