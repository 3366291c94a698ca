// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/diffusion/remote.hpp"

#include <sodium.h>

#include <bit>
#include <cmath>
#include <cstring>

#include <httplib.h>

namespace dnf {

namespace wire {

namespace {

std::vector<unsigned char> f32_bytes(const Image& image) {
  std::vector<unsigned char> bytes(image.data.size() * 4);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(image.data[i]));
    for (int b = 0; b < 4; ++b) bytes[i * 4 + static_cast<std::size_t>(b)] = (bits >> (8 * b)) & 0xFF;
  }
  return bytes;
}

std::string to_base64(const std::vector<unsigned char>& bytes) {
  const std::size_t cap =
      sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(cap, '\0');
  sodium_bin2base64(out.data(), cap, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<unsigned char> from_base64(const std::string& text) {
  std::vector<unsigned char> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw FormatError("tensor data is not valid base64");
  }
  out.resize(len);
  return out;
}

}  // namespace

nlohmann::json encode_tensor(const Image& image) {
  return {{"shape", {image.height, image.width, image.channels}},
          {"dtype", "f32"},
          {"data", to_base64(f32_bytes(image))}};
}

Image decode_tensor(const nlohmann::json& tensor) {
  try {
    const auto& shape = tensor.at("shape");
    if (!shape.is_array() || shape.size() != 3) throw FormatError("tensor shape must have 3 entries");
    if (tensor.value("dtype", "f32") != "f32") throw FormatError("tensor dtype must be f32");
    const int h = shape[0].get<int>();
    const int w = shape[1].get<int>();
    const int c = shape[2].get<int>();
    if (h < 0 || w < 0 || c < 1) throw FormatError("tensor shape has a bad dimension");
    Image out(w, h, c);
    const auto bytes = from_base64(tensor.at("data").get<std::string>());
    if (bytes.size() != out.data.size() * 4) {
      throw FormatError("tensor payload has " + std::to_string(bytes.size()) + " bytes, shape needs " +
                        std::to_string(out.data.size() * 4));
    }
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
      out.data[i] = std::bit_cast<float>(bits);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed tensor: ") + e.what());
  }
}

nlohmann::json encode_conditioning(const Conditioning& cond, const SphericalPose& reference) {
  nlohmann::json j = {{"prompt", cond.prompt}, {"guidance_scale", cond.guidance_scale}};
  if (cond.camera) {
    const SphericalPose& p = cond.camera->pose;
    const double d_azimuth = std::remainder(p.azimuth - reference.azimuth, 2.0 * kPi);
    j["camera"] = {{"radius", p.radius - reference.radius},
                   {"polar", p.polar - reference.polar},
                   {"azimuth", d_azimuth},
                   {"fov", cond.camera->fov_y}};
  } else {
    j["camera"] = nullptr;
  }
  if (cond.background) {
    j["background"] = {cond.background->x, cond.background->y, cond.background->z};
  }
  return j;
}

std::vector<std::string> capability_names(const OracleCapabilities& caps) {
  std::vector<std::string> out;
  if (caps.view_conditioned) out.emplace_back("view_conditioned");
  if (caps.text_conditioned) out.emplace_back("text_conditioned");
  if (caps.adaptable) out.emplace_back("adaptable");
  return out;
}

OracleCapabilities parse_capabilities(const nlohmann::json& names) {
  if (!names.is_array()) throw FormatError("capabilities must be an array");
  OracleCapabilities caps;
  for (const auto& n : names) {
    const std::string s = n.get<std::string>();
    if (s == "view_conditioned") {
      caps.view_conditioned = true;
    } else if (s == "text_conditioned") {
      caps.text_conditioned = true;
    } else if (s == "adaptable") {
      caps.adaptable = true;
    } else {
      throw FormatError("unknown capability '" + s + "'");
    }
  }
  return caps;
}

}  // namespace wire

struct RemoteOracle::Client {
  explicit Client(const std::string& url) : http(url) {}
  httplib::Client http;
};

RemoteOracle::RemoteOracle(const std::string& url, std::string role, SphericalPose reference,
                           int width, int height, double timeout_seconds)
    : url_(url), role_(std::move(role)), reference_(reference), width_(width), height_(height) {
  if (sodium_init() < 0) throw OracleError("cannot initialize base64 support");
  client_ = std::make_unique<Client>(url);
  if (!client_->http.is_valid()) throw OracleError("invalid oracle URL '" + url + "'");
  const auto seconds = static_cast<time_t>(timeout_seconds);
  const auto micros = static_cast<time_t>((timeout_seconds - static_cast<double>(seconds)) * 1e6);
  client_->http.set_connection_timeout(seconds, micros);
  client_->http.set_read_timeout(seconds, micros);
  client_->http.set_write_timeout(seconds, micros);
  latent_shape(width, height);
  info_.latent_shape = shapes_.at({width, height});
}

RemoteOracle::~RemoteOracle() = default;

nlohmann::json RemoteOracle::post(const std::string& endpoint, nlohmann::json body) const {
  body["v"] = wire::kVersion;
  body["role"] = role_;
  const auto res = client_->http.Post(endpoint, body.dump(), "application/json");
  if (!res) {
    throw OracleError("cannot reach oracle at " + url_ + endpoint + ": " +
                      httplib::to_string(res.error()));
  }
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw OracleError("oracle " + endpoint + " returned non-JSON (HTTP " +
                      std::to_string(res->status) + ")");
  }
  if (res->status != 200) {
    const std::string msg = reply.is_object() ? reply.value("error", std::string("no detail")) : "";
    throw OracleError("oracle " + endpoint + " failed with HTTP " + std::to_string(res->status) +
                      ": " + msg);
  }
  if (!reply.is_object() || reply.value("v", std::string()) != wire::kVersion) {
    throw OracleError("oracle " + endpoint + " replied without protocol version v1");
  }
  return reply;
}

std::array<int, 3> RemoteOracle::latent_shape(int width, int height) const {
  const auto key = std::make_pair(width, height);
  if (auto it = shapes_.find(key); it != shapes_.end()) return it->second;
  const nlohmann::json reply = post("/handshake", {{"width", width}, {"height", height}});
  try {
    const auto& s = reply.at("latent_shape");
    if (!s.is_array() || s.size() != 3) throw FormatError("latent_shape must have 3 entries");
    const std::array<int, 3> shape{s[1].get<int>(), s[0].get<int>(), s[2].get<int>()};
    HandshakeInfo& info = info_;
    info.capabilities = wire::parse_capabilities(reply.at("capabilities"));
    info.identity_codec = reply.value("identity_codec", false);
    info.schedule = reply.value("schedule", std::string());
    info.num_steps = reply.value("num_steps", 0);
    shapes_[key] = shape;
    return shape;
  } catch (const nlohmann::json::exception& e) {
    throw OracleError(std::string("malformed handshake: ") + e.what());
  } catch (const FormatError& e) {
    throw OracleError(std::string("malformed handshake: ") + e.what());
  }
}

bool RemoteOracle::identity_codec() const { return info_.identity_codec; }

namespace {

Image tensor_reply(const nlohmann::json& reply, const std::string& endpoint) {
  try {
    return wire::decode_tensor(reply.at("tensor"));
  } catch (const nlohmann::json::exception& e) {
    throw OracleError("oracle " + endpoint + ": " + e.what());
  } catch (const FormatError& e) {
    throw OracleError("oracle " + endpoint + ": " + e.what());
  }
}

}  // namespace

Image RemoteOracle::encode(const Image& image) {
  if (info_.identity_codec) return image;
  return tensor_reply(post("/encode", {{"tensor", wire::encode_tensor(image)}}), "/encode");
}

Image RemoteOracle::decode(const Image& latent) {
  if (info_.identity_codec) return latent;
  return tensor_reply(post("/decode", {{"tensor", wire::encode_tensor(latent)}}), "/decode");
}

Image RemoteOracle::predict(const Image& x_t, int t, const Conditioning& cond, bool adapted) {
  const nlohmann::json body = {{"tensor", wire::encode_tensor(x_t)},
                               {"t", t},
                               {"conditioning", wire::encode_conditioning(cond, reference_)},
                               {"adapted", adapted}};
  Image out = tensor_reply(post("/predict_eps", body), "/predict_eps");
  if (!out.same_shape(x_t)) {
    throw OracleError("oracle /predict_eps returned shape " + out.shape_string() + " for input " +
                      x_t.shape_string());
  }
  return out;
}

Image RemoteOracle::predict_eps(const Image& x_t, int t, const Conditioning& cond) {
  return predict(x_t, t, cond, false);
}

Image RemoteOracle::predict_eps_adapted(const Image& x_t, int t, const Conditioning& cond) {
  return predict(x_t, t, cond, true);
}

double RemoteOracle::adapt(const std::vector<AdaptSample>& batch) {
  if (!info_.capabilities.adaptable) throw OracleError("remote oracle is not adaptable");
  nlohmann::json samples = nlohmann::json::array();
  for (const AdaptSample& s : batch) {
    samples.push_back({{"x_t", wire::encode_tensor(s.x_t)},
                       {"eps", wire::encode_tensor(s.eps)},
                       {"t", s.t},
                       {"weight", s.weight},
                       {"conditioning", wire::encode_conditioning(s.conditioning, reference_)}});
  }
  const nlohmann::json reply = post("/adapt", {{"samples", samples}});
  try {
    return reply.at("loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw OracleError(std::string("oracle /adapt: ") + e.what());
  }
}

}  // namespace dnf
