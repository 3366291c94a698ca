// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <span>
#include <vector>

namespace dnf {

/// Fully connected network with ReLU hidden layers and a linear output layer.
/// Parameters are one flat array: per layer the row-major weight matrix
/// (out x in) followed by the bias vector.
class Mlp {
 public:
  Mlp(int input_dim, int hidden_layers, int hidden_width, int output_dim);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int hidden_layers() const { return hidden_layers_; }
  int hidden_width() const { return hidden_width_; }
  std::size_t param_count() const { return param_count_; }

  /// Activation buffer size needed by forward/backward.
  std::size_t scratch_size() const { return scratch_size_; }

  /// He-uniform weights, zero biases.
  void initialize(std::span<double> params, std::mt19937_64& rng) const;

  /// `scratch` receives every layer's post-activation values; backward
  /// reads them back, so pass the same buffer to both.
  void forward(std::span<const double> params, std::span<const double> input,
               std::span<double> output, std::span<double> scratch) const;

  /// Accumulates into `param_grad`; writes `input_grad` when non-empty.
  void backward(std::span<const double> params, std::span<const double> input,
                std::span<const double> output_grad, std::span<double> scratch,
                std::span<double> param_grad, std::span<double> input_grad) const;

 private:
  struct Layer {
    int in = 0;
    int out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
    std::size_t act_offset = 0;  // where this layer's output lives in scratch
  };

  int input_dim_;
  int hidden_layers_;
  int hidden_width_;
  int output_dim_;
  std::vector<Layer> layers_;
  std::size_t param_count_ = 0;
  std::size_t scratch_size_ = 0;
};

}  // namespace dnf
