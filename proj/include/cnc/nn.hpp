// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cnc {

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1, kLeakyRelu = 2 };

inline constexpr float kLeakySlope = 0.01f;

struct LayerShape {
  int in = 0;
  int out = 0;
  Activation act = Activation::kIdentity;
  std::size_t weight_offset = 0;  // out x in, row-major
  std::size_t bias_offset = 0;
};

// Stack of affine layers whose parameters live in one contiguous float
// buffer. `hidden` is applied after every layer but the last, `output` after
// the last.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<int> widths, Activation hidden, Activation output = Activation::kIdentity);

  int input_width() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_width() const { return layers_.empty() ? 0 : layers_.back().out; }
  const std::vector<LayerShape>& layers() const { return layers_; }
  std::vector<int> widths() const;
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  std::span<const float> parameters() const { return params_; }
  // Mutable access bumps the version so caches from earlier forwards go stale.
  std::span<float> mutable_parameters() {
    ++version_;
    return params_;
  }
  std::size_t parameter_count() const { return params_.size(); }
  std::uint64_t version() const { return version_; }

  // Kaiming-uniform weights (fan-in, gain matched to the hidden activation),
  // zero biases.
  void init_kaiming_uniform(std::uint64_t seed);

  bool operator==(const DenseNet& other) const {
    return layers_.size() == other.layers_.size() && widths() == other.widths() && hidden_ == other.hidden_ &&
           output_ == other.output_ && params_ == other.params_;
  }

 private:
  std::vector<LayerShape> layers_;
  std::vector<float> params_;
  Activation hidden_ = Activation::kRelu;
  Activation output_ = Activation::kIdentity;
  std::uint64_t version_ = 0;
};

// Activations kept by forward() for backward(). activations[0] is the input,
// activations[i + 1] the post-activation output of layer i; pre[i] the
// pre-activation of layer i.
struct ForwardCache {
  int batch = 0;
  std::uint64_t version = 0;
  const DenseNet* net = nullptr;
  std::vector<std::vector<float>> activations;
  std::vector<std::vector<float>> pre;

  std::span<const float> output() const { return activations.back(); }
};

// Batch-major input (batch x input_width). Throws std::invalid_argument on
// width mismatch.
void forward(const DenseNet& net, std::span<const float> input, int batch, ForwardCache& cache);

// Accumulates parameter gradients into `param_grads` (same layout as
// parameters()). Writes the input gradient when `input_grad` is non-null.
// Throws std::logic_error when the cache does not match the net.
void backward(const DenseNet& net, const ForwardCache& cache, std::span<const float> upstream,
              std::span<float> param_grads, std::vector<float>* input_grad = nullptr);

float activate(Activation act, float x);
float activate_derivative(Activation act, float pre);

struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
  std::int64_t step = 0;
  std::int64_t skipped = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0f), v(n, 0.0f) {}
};

// Bias-corrected Adam update. Returns false, leaving params untouched and
// counting the skip, when any gradient is non-finite.
bool adam_step(AdamState& state, std::span<float> params, std::span<const float> grads, double lr);

inline constexpr double kBaseLearningRate = 0.01;

// Linear warm-up over the first 5% of iterations, then x0.33 at the 45%,
// 60%, 75%, 85% and 95% marks.
double lr_schedule(std::int64_t iter, std::int64_t total_iters, double base_lr = kBaseLearningRate);

}  // namespace cnc
