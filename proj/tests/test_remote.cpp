// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dnf/diffusion/remote.hpp"
#include "dnf/diffusion/sds.hpp"
#include "dnf/pipeline/oracles.hpp"

using namespace dnf;
using nlohmann::json;

namespace {

Image random_image(int w, int h, int c, std::mt19937_64& rng) {
  Image img(w, h, c);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (double& v : img.data) v = u(rng);
  return img;
}

// Plain RFC 4648 decoder, independent of the library under test.
std::vector<unsigned char> base64_decode(const std::string& s) {
  static const std::string alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::vector<unsigned char> out;
  unsigned buf = 0;
  int bits = 0;
  for (char ch : s) {
    if (ch == '=') break;
    buf = (buf << 6) | static_cast<unsigned>(alphabet.find(ch));
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((buf >> bits) & 0xFF));
    }
  }
  return out;
}

Camera test_camera(double azimuth) {
  return make_orbit_camera({2.0, kPi / 2.0, azimuth}, kPi / 4.0, 8, 6, 1.0);
}

// In-process stand-in for the bridge: serves TargetImageOracle semantics for
// a fixed target image over the wire protocol.
class MockServer {
 public:
  MockServer(Image target, std::string schedule_name = "linear-beta", int num_steps = 1000)
      : schedule_(build_schedule(1000, ScheduleProfile::kLinearBeta)),
        oracle_([target](const Conditioning&) { return target; }, schedule_,
                {.view_conditioned = true, .text_conditioned = true, .adaptable = true}) {
    server_.Post("/handshake", [=, this](const httplib::Request& req, httplib::Response& res) {
      const json body = record(req);
      const int w = body.at("width");
      const int h = body.at("height");
      reply(res, {{"latent_shape", {h, w, 3}},
                  {"capabilities", {"view_conditioned", "text_conditioned", "adaptable"}},
                  {"identity_codec", true},
                  {"schedule", schedule_name},
                  {"num_steps", num_steps}});
    });
    server_.Post("/predict_eps", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = record(req);
      if (fail_next_.exchange(false)) {
        res.status = 400;
        res.set_content(json{{"v", "v1"}, {"error", "shape mismatch"}}.dump(), "application/json");
        return;
      }
      const Image x = wire::decode_tensor(body.at("tensor"));
      const int t = body.at("t");
      const Image eps = body.at("adapted").get<bool>() ? oracle_.predict_eps_adapted(x, t, {})
                                                        : oracle_.predict_eps(x, t, {});
      if (omit_version_) {
        res.set_content(json{{"tensor", wire::encode_tensor(eps)}}.dump(), "application/json");
        return;
      }
      reply(res, {{"tensor", wire::encode_tensor(eps)}});
    });
    server_.Post("/adapt", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = record(req);
      std::vector<AdaptSample> batch;
      for (const json& s : body.at("samples")) {
        AdaptSample a;
        a.x_t = wire::decode_tensor(s.at("x_t"));
        a.eps = wire::decode_tensor(s.at("eps"));
        a.t = s.at("t");
        a.weight = s.at("weight");
        batch.push_back(std::move(a));
      }
      reply(res, {{"loss", oracle_.adapt(batch)}});
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() { stop(); }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  json last_request() {
    std::lock_guard<std::mutex> lock(mu_);
    return last_;
  }
  int requests() const { return count_; }
  void fail_next() { fail_next_ = true; }
  void omit_version() { omit_version_ = true; }

 private:
  json record(const httplib::Request& req) {
    json body = json::parse(req.body);
    std::lock_guard<std::mutex> lock(mu_);
    last_ = body;
    ++count_;
    return body;
  }
  static void reply(httplib::Response& res, json body) {
    body["v"] = "v1";
    res.set_content(body.dump(), "application/json");
  }

  NoiseSchedule schedule_;
  TargetImageOracle oracle_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  json last_;
  std::atomic<int> count_{0};
  std::atomic<bool> fail_next_{false};
  std::atomic<bool> omit_version_{false};
};

}  // namespace

TEST_CASE("tensor encoding is little-endian f32 in base64") {
  Image one(1, 1, 1, 1.0);
  const json t = wire::encode_tensor(one);
  CHECK(t.at("shape") == json::array({1, 1, 1}));
  CHECK(t.at("dtype") == "f32");
  CHECK(t.at("data") == "AACAPw==");

  std::mt19937_64 rng(5);
  const Image img = random_image(5, 3, 2, rng);
  const json enc = wire::encode_tensor(img);
  CHECK(enc.at("shape") == json::array({3, 5, 2}));
  const auto bytes = base64_decode(enc.at("data").get<std::string>());
  REQUIRE(bytes.size() == img.data.size() * 4);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    CHECK(std::bit_cast<float>(bits) == static_cast<float>(img.data[i]));
  }
}

TEST_CASE("tensor round trip preserves f32 values bit for bit") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Image img = random_image(1 + trial % 7, 1 + trial % 5, 1 + trial % 4, rng);
    img.data[0] = 1e-40;  // subnormal in f32
    if (img.data.size() > 1) img.data[1] = -0.0;
    const Image back = wire::decode_tensor(wire::encode_tensor(img));
    REQUIRE(back.same_shape(img));
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      CHECK(std::bit_cast<std::uint32_t>(static_cast<float>(back.data[i])) ==
            std::bit_cast<std::uint32_t>(static_cast<float>(img.data[i])));
    }
  }
}

TEST_CASE("malformed tensors are rejected") {
  json t = wire::encode_tensor(Image(2, 2, 1, 0.5));
  json short_shape = t;
  short_shape["shape"] = {2, 2};
  CHECK_THROWS_AS(wire::decode_tensor(short_shape), FormatError);
  json wrong_len = t;
  wrong_len["shape"] = {2, 3, 1};
  CHECK_THROWS_AS(wire::decode_tensor(wrong_len), FormatError);
  json bad_b64 = t;
  bad_b64["data"] = "!!!!";
  CHECK_THROWS_AS(wire::decode_tensor(bad_b64), FormatError);
  json bad_dtype = t;
  bad_dtype["dtype"] = "f16";
  CHECK_THROWS_AS(wire::decode_tensor(bad_dtype), FormatError);
  CHECK_THROWS_AS(wire::decode_tensor(json{{"shape", {1, 1, 1}}}), FormatError);
}

TEST_CASE("conditioning carries the pose relative to the reference") {
  const SphericalPose ref{2.0, kPi / 2.0, 3.0 * kPi / 2.0};
  Conditioning cond;
  cond.prompt = "a red ball";
  cond.guidance_scale = 7.5;
  cond.camera = make_orbit_camera({1.8, kPi / 3.0, 0.25}, 0.7, 8, 8, 1.0);
  const json j = wire::encode_conditioning(cond, ref);
  CHECK(j.at("prompt") == "a red ball");
  CHECK(j.at("guidance_scale").get<double>() == 7.5);
  CHECK(j.at("camera").at("radius").get<double>() == doctest::Approx(-0.2));
  CHECK(j.at("camera").at("polar").get<double>() == doctest::Approx(kPi / 3.0 - kPi / 2.0));
  // 0.25 - 3pi/2 wraps to 0.25 + pi/2.
  CHECK(j.at("camera").at("azimuth").get<double>() == doctest::Approx(0.25 + kPi / 2.0));
  CHECK(j.at("camera").at("fov").get<double>() == 0.7);
  CHECK(wire::encode_conditioning(Conditioning{}, ref).at("camera").is_null());
}

TEST_CASE("capability names round trip") {
  const OracleCapabilities caps{.view_conditioned = true, .text_conditioned = false, .adaptable = true};
  const auto names = wire::capability_names(caps);
  const OracleCapabilities back = wire::parse_capabilities(json(names));
  CHECK(back.view_conditioned);
  CHECK_FALSE(back.text_conditioned);
  CHECK(back.adaptable);
  CHECK_THROWS_AS(wire::parse_capabilities(json::array({"telepathic"})), FormatError);
}

TEST_CASE("remote oracle handshake and requests follow the protocol") {
  std::mt19937_64 rng(1);
  const Image target = random_image(8, 6, 3, rng);
  MockServer server(target);
  RemoteOracle remote(server.url(), "geometry", {2.0, kPi / 2.0, 0.0}, 8, 6, 5.0);

  json hs = server.last_request();
  CHECK(hs.at("v") == "v1");
  CHECK(hs.at("role") == "geometry");
  CHECK(hs.at("width") == 8);
  CHECK(hs.at("height") == 6);
  CHECK(remote.latent_shape(8, 6) == std::array<int, 3>{8, 6, 3});
  CHECK(remote.capabilities().view_conditioned);
  CHECK(remote.capabilities().adaptable);
  CHECK(remote.identity_codec());
  CHECK(remote.handshake().schedule == "linear-beta");
  CHECK(remote.handshake().num_steps == 1000);

  // Cached shape: no new request; new size: a new handshake.
  const int before = server.requests();
  remote.latent_shape(8, 6);
  CHECK(server.requests() == before);
  CHECK(remote.latent_shape(16, 4) == std::array<int, 3>{16, 4, 3});
  CHECK(server.requests() == before + 1);

  Conditioning cond;
  cond.camera = test_camera(0.5);
  cond.prompt = "p";
  const Image x = random_image(8, 6, 3, rng);
  remote.predict_eps(x, 400, cond);
  const json req = server.last_request();
  CHECK(req.at("v") == "v1");
  CHECK(req.at("t") == 400);
  CHECK(req.at("adapted") == false);
  CHECK(req.at("conditioning").at("camera").at("azimuth").get<double>() == doctest::Approx(0.5));
  remote.predict_eps_adapted(x, 400, cond);
  CHECK(server.last_request().at("adapted") == true);
}

TEST_CASE("remote predictions match the local oracle up to f32 transport") {
  std::mt19937_64 rng(2);
  const Image target = random_image(8, 6, 3, rng);
  MockServer server(target);
  RemoteOracle remote(server.url(), "texture", {}, 8, 6, 5.0);
  const NoiseSchedule schedule = build_schedule(1000, ScheduleProfile::kLinearBeta);

  for (int trial = 0; trial < 10; ++trial) {
    const int t = 20 + 95 * trial;
    const Image eps = gaussian_like(target, rng);
    const Image x_t = forward_diffuse(target, t, eps, schedule);
    const Image got = remote.predict_eps(x_t, t, {});
    // The oracle identity: x_t built from the target returns the injected noise.
    for (std::size_t i = 0; i < eps.data.size(); ++i) {
      CHECK(std::abs(got.data[i] - eps.data[i]) <= 1e-6 / schedule.sigma[static_cast<std::size_t>(t)] * 8.0);
    }
  }

  // Score distillation through the wire matches the in-process oracle.
  TargetImageOracle local([target](const Conditioning&) { return target; }, schedule,
                          {.text_conditioned = true});
  const Image render = random_image(8, 6, 3, rng);
  std::mt19937_64 r1(77);
  std::mt19937_64 r2(77);
  const DistillResult a = distill(remote, render, {}, schedule, r1);
  const DistillResult b = distill(local, render, {}, schedule, r2);
  CHECK(a.t == b.t);
  double scale = 0.0;
  for (double v : b.pixel_grad.data) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < a.pixel_grad.data.size(); ++i) {
    CHECK(std::abs(a.pixel_grad.data[i] - b.pixel_grad.data[i]) <= 1e-5 * (1.0 + scale));
  }
}

TEST_CASE("remote adapt forwards samples and returns the loss") {
  std::mt19937_64 rng(3);
  const Image target = random_image(8, 6, 3, rng);
  MockServer server(target);
  RemoteOracle remote(server.url(), "texture", {}, 8, 6, 5.0);
  const NoiseSchedule schedule = build_schedule(1000, ScheduleProfile::kLinearBeta);
  Conditioning cond;
  cond.camera = test_camera(1.0);
  cond.prompt = "prompt";
  const double loss = adapt_oracle(remote, {random_image(8, 6, 3, rng)}, {cond}, schedule, rng);
  CHECK(std::isfinite(loss));
  CHECK(loss > 0.0);
  const json req = server.last_request();
  REQUIRE(req.at("samples").size() == 1);
  CHECK(req.at("samples")[0].at("conditioning").at("prompt") == "prompt");
}

TEST_CASE("remote failures surface as oracle errors") {
  std::mt19937_64 rng(4);
  const Image target = random_image(8, 6, 3, rng);
  auto server = std::make_unique<MockServer>(target);
  RemoteOracle remote(server->url(), "geometry", {}, 8, 6, 2.0);
  const Image x = random_image(8, 6, 3, rng);

  server->fail_next();
  try {
    remote.predict_eps(x, 100, {});
    FAIL("expected an oracle error");
  } catch (const OracleError& e) {
    CHECK(std::string(e.what()).find("shape mismatch") != std::string::npos);
    CHECK(std::string(e.what()).find("400") != std::string::npos);
  }

  server->omit_version();
  CHECK_THROWS_AS(remote.predict_eps(x, 100, {}), OracleError);

  const std::string url = server->url();
  server->stop();
  CHECK_THROWS_AS(remote.predict_eps(x, 100, {}), OracleError);
  CHECK_THROWS_AS(RemoteOracle(url, "geometry", {}, 8, 6, 1.0), OracleError);
}

TEST_CASE("oracle factory rejects a remote schedule mismatch") {
  MockServer server(Image(64, 64, 3, 0.5), "cosine");
  RunConfig config;
  config.inputs.scene.kind = SceneKind::kFromFiles;
  config.oracle.kind = OracleKind::kRemote;
  config.oracle.url = server.url();
  config.oracle.timeout_seconds = 5.0;
  const NoiseSchedule schedule = build_schedule(1000, ScheduleProfile::kLinearBeta);
  CHECK_THROWS_AS(make_oracles(config, schedule), OracleError);

  MockServer good(Image(64, 64, 3, 0.5));
  config.oracle.url = good.url();
  const OracleSet set = make_oracles(config, schedule);
  CHECK(set.geometry->capabilities().view_conditioned);
  CHECK(set.texture->capabilities().text_conditioned);
}
