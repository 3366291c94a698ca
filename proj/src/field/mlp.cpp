// Copyright 2026 The DNF Authors
// SPDX-License-Identifier: Apache-2.0
#include "dnf/field/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dnf {

Mlp::Mlp(int input_dim, int hidden_layers, int hidden_width, int output_dim)
    : input_dim_(input_dim),
      hidden_layers_(hidden_layers),
      hidden_width_(hidden_width),
      output_dim_(output_dim) {
  if (input_dim < 1 || output_dim < 1 || hidden_layers < 0 ||
      (hidden_layers > 0 && hidden_width < 1)) {
    throw std::invalid_argument("Mlp: invalid layer sizes");
  }
  int in = input_dim;
  std::size_t offset = 0;
  std::size_t act = 0;
  for (int l = 0; l <= hidden_layers; ++l) {
    const int out = l == hidden_layers ? output_dim : hidden_width;
    Layer layer;
    layer.in = in;
    layer.out = out;
    layer.weight_offset = offset;
    offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
    layer.bias_offset = offset;
    offset += static_cast<std::size_t>(out);
    layer.act_offset = act;
    act += static_cast<std::size_t>(out);
    layers_.push_back(layer);
    in = out;
  }
  param_count_ = offset;
  // Hidden activations plus one spare buffer for the backward pass.
  scratch_size_ = act + 2 * static_cast<std::size_t>(std::max(hidden_width, output_dim));
}

void Mlp::initialize(std::span<double> params, std::mt19937_64& rng) const {
  std::fill(params.begin(), params.end(), 0.0);
  for (const Layer& layer : layers_) {
    const double bound = std::sqrt(6.0 / layer.in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t n = static_cast<std::size_t>(layer.in) * static_cast<std::size_t>(layer.out);
    for (std::size_t i = 0; i < n; ++i) params[layer.weight_offset + i] = dist(rng);
  }
}

void Mlp::forward(std::span<const double> params, std::span<const double> input,
                  std::span<double> output, std::span<double> scratch) const {
  const double* x = input.data();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const bool last = l + 1 == layers_.size();
    double* y = scratch.data() + layer.act_offset;
    const double* w = params.data() + layer.weight_offset;
    const double* b = params.data() + layer.bias_offset;
    for (int o = 0; o < layer.out; ++o) {
      const double* wr = w + static_cast<std::ptrdiff_t>(o) * layer.in;
      double acc = b[o];
      for (int i = 0; i < layer.in; ++i) acc += wr[i] * x[i];
      y[o] = last ? acc : std::max(acc, 0.0);
    }
    x = y;
  }
  const Layer& last = layers_.back();
  std::copy_n(scratch.data() + last.act_offset, output_dim_, output.data());
}

void Mlp::backward(std::span<const double> params, std::span<const double> input,
                   std::span<const double> output_grad, std::span<double> scratch,
                   std::span<double> param_grad, std::span<double> input_grad) const {
  const std::size_t spare = layers_.back().act_offset + static_cast<std::size_t>(output_dim_);
  const std::size_t width = static_cast<std::size_t>(std::max(hidden_width_, output_dim_));
  double* grad_a = scratch.data() + spare;
  double* grad_b = grad_a + width;
  std::copy(output_grad.begin(), output_grad.end(), grad_a);

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const double* x = li == 0 ? input.data() : scratch.data() + layers_[li - 1].act_offset;
    const double* w = params.data() + layer.weight_offset;
    double* gw = param_grad.data() + layer.weight_offset;
    double* gb = param_grad.data() + layer.bias_offset;
    // grad_a holds d(loss)/d(pre-activation) of this layer.
    for (int o = 0; o < layer.out; ++o) {
      const double g = grad_a[o];
      if (g == 0.0) continue;
      gb[o] += g;
      double* gwr = gw + static_cast<std::ptrdiff_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) gwr[i] += g * x[i];
    }
    const bool need_input = li > 0 || !input_grad.empty();
    if (!need_input) break;
    double* gx = li == 0 ? input_grad.data() : grad_b;
    for (int i = 0; i < layer.in; ++i) gx[i] = 0.0;
    for (int o = 0; o < layer.out; ++o) {
      const double g = grad_a[o];
      if (g == 0.0) continue;
      const double* wr = w + static_cast<std::ptrdiff_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) gx[i] += g * wr[i];
    }
    if (li == 0) break;
    // Through the ReLU of the previous layer.
    for (int i = 0; i < layer.in; ++i) {
      if (x[i] <= 0.0) gx[i] = 0.0;
    }
    std::swap(grad_a, grad_b);
  }
}

}  // namespace dnf
