// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace cnc {

DenseNet::DenseNet(std::vector<int> widths, Activation hidden, Activation output) : hidden_(hidden), output_(output) {
  if (widths.size() < 2) throw std::invalid_argument("DenseNet needs at least input and output widths");
  std::size_t offset = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] < 1 || widths[i + 1] < 1) throw std::invalid_argument("DenseNet widths must be positive");
    LayerShape layer;
    layer.in = widths[i];
    layer.out = widths[i + 1];
    layer.act = (i + 2 == widths.size()) ? output : hidden;
    layer.weight_offset = offset;
    offset += static_cast<std::size_t>(layer.in) * layer.out;
    layer.bias_offset = offset;
    offset += layer.out;
    layers_.push_back(layer);
  }
  params_.assign(offset, 0.0f);
}

std::vector<int> DenseNet::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(layers_.front().in);
  for (const auto& l : layers_) w.push_back(l.out);
  return w;
}

void DenseNet::init_kaiming_uniform(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double slope = hidden_ == Activation::kLeakyRelu ? kLeakySlope : 0.0;
  const double gain = hidden_ == Activation::kIdentity ? 1.0 : std::sqrt(2.0 / (1.0 + slope * slope));
  for (const auto& layer : layers_) {
    const double bound = gain * std::sqrt(3.0 / layer.in);
    std::uniform_real_distribution<float> dist(static_cast<float>(-bound), static_cast<float>(bound));
    for (int i = 0; i < layer.in * layer.out; ++i) params_[layer.weight_offset + i] = dist(rng);
    for (int o = 0; o < layer.out; ++o) params_[layer.bias_offset + o] = 0.0f;
  }
  ++version_;
}

float activate(Activation act, float x) {
  switch (act) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return x > 0.0f ? x : 0.0f;
    case Activation::kLeakyRelu: return x > 0.0f ? x : kLeakySlope * x;
  }
  return x;
}

float activate_derivative(Activation act, float pre) {
  switch (act) {
    case Activation::kIdentity: return 1.0f;
    case Activation::kRelu: return pre > 0.0f ? 1.0f : 0.0f;
    case Activation::kLeakyRelu: return pre > 0.0f ? 1.0f : kLeakySlope;
  }
  return 1.0f;
}

void forward(const DenseNet& net, std::span<const float> input, int batch, ForwardCache& cache) {
  if (net.layers().empty()) throw std::invalid_argument("forward: empty network");
  if (batch < 0 || input.size() != static_cast<std::size_t>(batch) * net.input_width())
    throw std::invalid_argument("forward: input width mismatch");
  const auto params = net.parameters();
  const auto& layers = net.layers();
  cache.batch = batch;
  cache.version = net.version();
  cache.net = &net;
  cache.activations.resize(layers.size() + 1);
  cache.pre.resize(layers.size());
  cache.activations[0].assign(input.begin(), input.end());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const LayerShape& layer = layers[li];
    const float* w = params.data() + layer.weight_offset;
    const float* b = params.data() + layer.bias_offset;
    const std::vector<float>& in = cache.activations[li];
    std::vector<float>& pre = cache.pre[li];
    std::vector<float>& out = cache.activations[li + 1];
    pre.resize(static_cast<std::size_t>(batch) * layer.out);
    out.resize(pre.size());
    for (int n = 0; n < batch; ++n) {
      const float* x = in.data() + static_cast<std::size_t>(n) * layer.in;
      float* z = pre.data() + static_cast<std::size_t>(n) * layer.out;
      for (int o = 0; o < layer.out; ++o) {
        const float* row = w + static_cast<std::size_t>(o) * layer.in;
        float acc = b[o];
        for (int i = 0; i < layer.in; ++i) acc += row[i] * x[i];
        z[o] = acc;
      }
      float* y = out.data() + static_cast<std::size_t>(n) * layer.out;
      for (int o = 0; o < layer.out; ++o) y[o] = activate(layer.act, z[o]);
    }
  }
}

void backward(const DenseNet& net, const ForwardCache& cache, std::span<const float> upstream,
              std::span<float> param_grads, std::vector<float>* input_grad) {
  if (cache.net != &net || cache.version != net.version())
    throw std::logic_error("backward: stale forward cache");
  const int batch = cache.batch;
  if (upstream.size() != static_cast<std::size_t>(batch) * net.output_width())
    throw std::logic_error("backward: upstream gradient shape mismatch");
  if (param_grads.size() != net.parameter_count()) throw std::logic_error("backward: gradient buffer size mismatch");
  const auto params = net.parameters();
  const auto& layers = net.layers();
  std::vector<float> grad(upstream.begin(), upstream.end());
  std::vector<float> next;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const LayerShape& layer = layers[li];
    const float* w = params.data() + layer.weight_offset;
    float* gw = param_grads.data() + layer.weight_offset;
    float* gb = param_grads.data() + layer.bias_offset;
    const std::vector<float>& pre = cache.pre[li];
    const std::vector<float>& in = cache.activations[li];
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] *= activate_derivative(layer.act, pre[k]);
    const bool need_input = li > 0 || input_grad != nullptr;
    if (need_input) next.assign(static_cast<std::size_t>(batch) * layer.in, 0.0f);
    for (int n = 0; n < batch; ++n) {
      const float* g = grad.data() + static_cast<std::size_t>(n) * layer.out;
      const float* x = in.data() + static_cast<std::size_t>(n) * layer.in;
      float* gx = need_input ? next.data() + static_cast<std::size_t>(n) * layer.in : nullptr;
      for (int o = 0; o < layer.out; ++o) {
        const float go = g[o];
        if (go == 0.0f) continue;
        gb[o] += go;
        float* gw_row = gw + static_cast<std::size_t>(o) * layer.in;
        const float* w_row = w + static_cast<std::size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i) gw_row[i] += go * x[i];
        if (gx)
          for (int i = 0; i < layer.in; ++i) gx[i] += go * w_row[i];
      }
    }
    if (need_input) grad.swap(next);
  }
  if (input_grad) *input_grad = std::move(grad);
}

bool adam_step(AdamState& state, std::span<float> params, std::span<const float> grads, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  for (float g : grads) {
    if (!std::isfinite(g)) {
      ++state.skipped;
      return false;
    }
  }
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = b1 * state.m[i] + (1.0 - b1) * g;
    const double v = b2 * state.v[i] + (1.0 - b2) * g * g;
    state.m[i] = static_cast<float>(m);
    state.v[i] = static_cast<float>(v);
    params[i] -= static_cast<float>(lr * (m / c1) / (std::sqrt(v / c2) + state.eps));
  }
  return true;
}

double lr_schedule(std::int64_t iter, std::int64_t total_iters, double base_lr) {
  if (total_iters <= 0) return base_lr;
  const double total = static_cast<double>(total_iters);
  const double warm = 0.05 * total;
  if (iter < warm) return base_lr * static_cast<double>(iter) / warm;
  static constexpr double kDecayMarks[] = {0.45, 0.60, 0.75, 0.85, 0.95};
  double lr = base_lr;
  for (double mark : kDecayMarks)
    if (static_cast<double>(iter) >= mark * total) lr *= 0.33;
  return lr;
}

}  // namespace cnc
