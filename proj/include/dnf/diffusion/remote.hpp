// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnf/diffusion/oracle.hpp"

namespace dnf {

/// Wire protocol "v1": JSON over HTTP POST. Every request and response
/// carries "v": "v1". Tensors are {"shape": [height, width, channels],
/// "dtype": "f32", "data": base64 of little-endian f32 in row-major order}.
///
///   /handshake    {role, width, height} -> {latent_shape, capabilities,
///                                           identity_codec, schedule,
///                                           num_steps}
///   /encode       {role, tensor} -> {tensor}
///   /decode       {role, tensor} -> {tensor}
///   /predict_eps  {role, tensor, t, conditioning, adapted} -> {tensor}
///   /adapt        {role, samples: [{x_t, eps, t, weight, conditioning}]}
///                 -> {loss}
///
/// Conditioning is {prompt, guidance_scale, camera: {radius, polar,
/// azimuth, fov}, background?: [r, g, b]} with the pose given as offsets
/// from the reference pose (radians). Non-200 replies carry
/// {"error": message}.
namespace wire {

inline constexpr const char* kVersion = "v1";

nlohmann::json encode_tensor(const Image& image);
/// Throws FormatError on a malformed tensor or a shape/length mismatch.
Image decode_tensor(const nlohmann::json& tensor);

nlohmann::json encode_conditioning(const Conditioning& cond, const SphericalPose& reference);

std::vector<std::string> capability_names(const OracleCapabilities& caps);
OracleCapabilities parse_capabilities(const nlohmann::json& names);

}  // namespace wire

struct HandshakeInfo {
  std::array<int, 3> latent_shape{};  // width, height, channels
  OracleCapabilities capabilities;
  bool identity_codec = false;
  std::string schedule;
  int num_steps = 0;
};

/// Client for an oracle served over the wire protocol. Connection failures
/// and error replies raise OracleError. When the server declares an
/// identity codec, encode/decode are answered locally.
class RemoteOracle final : public GuidanceOracle {
 public:
  /// `role` selects the served model ("geometry" or "texture"). Performs the
  /// handshake for a width x height working resolution.
  RemoteOracle(const std::string& url, std::string role, SphericalPose reference, int width,
               int height, double timeout_seconds = 60.0);
  ~RemoteOracle() override;

  const HandshakeInfo& handshake() const { return info_; }

  OracleCapabilities capabilities() const override { return info_.capabilities; }
  std::array<int, 3> latent_shape(int width, int height) const override;
  bool identity_codec() const override;
  Image encode(const Image& image) override;
  Image decode(const Image& latent) override;
  Image predict_eps(const Image& x_t, int t, const Conditioning& cond) override;
  Image predict_eps_adapted(const Image& x_t, int t, const Conditioning& cond) override;
  double adapt(const std::vector<AdaptSample>& batch) override;

 private:
  nlohmann::json post(const std::string& endpoint, nlohmann::json body) const;
  Image predict(const Image& x_t, int t, const Conditioning& cond, bool adapted);

  struct Client;
  std::unique_ptr<Client> client_;
  std::string url_;
  std::string role_;
  SphericalPose reference_;
  mutable HandshakeInfo info_;
  int width_;
  int height_;
  mutable std::map<std::pair<int, int>, std::array<int, 3>> shapes_;
};

}  // namespace dnf
