// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/nn.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace cnc {
namespace {

constexpr double kGolden[2] = {1.2133243083953857, -0.51640987396240234};

// Double-precision evaluation of a DenseNet, written independently of
// forward().
std::vector<double> reference_forward(const DenseNet& net, const std::vector<double>& params,
                                      const std::vector<double>& x) {
  std::vector<double> cur = x;
  for (const auto& l : net.layers()) {
    std::vector<double> next(l.out);
    for (int o = 0; o < l.out; ++o) {
      double z = params[l.bias_offset + o];
      for (int i = 0; i < l.in; ++i) z += params[l.weight_offset + o * l.in + i] * cur[i];
      switch (l.act) {
        case Activation::kIdentity: break;
        case Activation::kRelu: z = z > 0 ? z : 0; break;
        case Activation::kLeakyRelu: z = z > 0 ? z : 0.01 * z; break;
      }
      next[o] = z;
    }
    cur.swap(next);
  }
  return cur;
}

TEST(Forward, IdentityLayer) {
  DenseNet net({3, 3}, Activation::kRelu);
  auto p = net.mutable_parameters();
  for (int i = 0; i < 3; ++i) p[i * 3 + i] = 1.0f;
  const std::vector<float> x{0.5f, -2.0f, 7.0f};
  ForwardCache c;
  forward(net, x, 1, c);
  EXPECT_EQ(std::vector<float>(c.output().begin(), c.output().end()), x);
}

TEST(Forward, ZeroWeightsGiveBias) {
  DenseNet net({4, 2}, Activation::kRelu);
  auto p = net.mutable_parameters();
  p[net.layers()[0].bias_offset] = 0.25f;
  p[net.layers()[0].bias_offset + 1] = -3.0f;
  const std::vector<float> x{1, 2, 3, 4, 5, 6, 7, 8};
  ForwardCache c;
  forward(net, x, 2, c);
  EXPECT_EQ(std::vector<float>(c.output().begin(), c.output().end()), (std::vector<float>{0.25f, -3.0f, 0.25f, -3.0f}));
}

TEST(Forward, WidthMismatch) {
  DenseNet net({4, 2}, Activation::kRelu);
  ForwardCache c;
  EXPECT_THROW(forward(net, std::vector<float>(5), 1, c), std::invalid_argument);
}

TEST(Forward, GoldenTwoLayerNet) {
  DenseNet net({3, 4, 2}, Activation::kRelu);
  net.init_kaiming_uniform(42);
  auto p = net.mutable_parameters();
  for (int o = 0; o < 4; ++o) p[net.layers()[0].bias_offset + o] = 0.1f * o;
  const std::vector<float> x{0.2f, -0.4f, 0.9f};
  ForwardCache c;
  forward(net, x, 1, c);
  // Recorded from the first verified run; the double-precision reference
  // agrees with it.
  std::vector<double> params(net.parameters().begin(), net.parameters().end());
  const auto ref = reference_forward(net, params, {0.2, -0.4, 0.9});
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(c.output()[j], ref[j], 1e-6);
  EXPECT_NEAR(c.output()[0], kGolden[0], 1e-6);
  EXPECT_NEAR(c.output()[1], kGolden[1], 1e-6);
}

TEST(Backward, LinearLayerAtTargetHasZeroGradient) {
  DenseNet net({2, 2}, Activation::kRelu);
  net.init_kaiming_uniform(1);
  ForwardCache c;
  forward(net, std::vector<float>{0.3f, 0.7f}, 1, c);
  // MSE against its own output has zero upstream gradient.
  std::vector<float> upstream(2);
  for (int j = 0; j < 2; ++j) upstream[j] = 2.0f * (c.output()[j] - c.output()[j]);
  std::vector<float> g(net.parameter_count(), 0.0f);
  backward(net, c, upstream, g);
  for (float x : g) EXPECT_EQ(x, 0.0f);
}

TEST(Backward, LeakyNegativeSlope) {
  DenseNet net({1, 1, 1}, Activation::kLeakyRelu);
  auto p = net.mutable_parameters();
  p[0] = 1.0f;  // first weight
  p[1] = -1.0f; // first bias: pre-activation is negative for x = 0.5
  p[2] = 1.0f;  // second weight
  ForwardCache c;
  forward(net, std::vector<float>{0.5f}, 1, c);
  std::vector<float> g(net.parameter_count(), 0.0f);
  std::vector<float> gin;
  backward(net, c, std::vector<float>{2.0f}, g, &gin);
  EXPECT_FLOAT_EQ(gin[0], kLeakySlope * 2.0f);
  EXPECT_FLOAT_EQ(g[1], kLeakySlope * 2.0f);
}

TEST(Backward, RejectsStaleCache) {
  DenseNet net({2, 2}, Activation::kRelu);
  ForwardCache c;
  forward(net, std::vector<float>{1, 2}, 1, c);
  net.mutable_parameters()[0] = 1.0f;
  std::vector<float> g(net.parameter_count());
  EXPECT_THROW(backward(net, c, std::vector<float>{1, 1}, g), std::logic_error);
  DenseNet other({2, 2}, Activation::kRelu);
  EXPECT_THROW(backward(other, c, std::vector<float>{1, 1}, g), std::logic_error);
}

// Every parameter and input gradient of a 3-layer net against central
// differences of the double-precision reference. Loss = sum(c_j * y_j).
void check_gradients(Activation hidden, std::uint64_t seed) {
  DenseNet net({5, 7, 6, 3}, hidden);
  net.init_kaiming_uniform(seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  {
    auto p = net.mutable_parameters();
    for (const auto& l : net.layers())
      for (int o = 0; o < l.out; ++o) p[l.bias_offset + o] = 0.3f * u(rng);
  }
  const int batch = 4;
  std::vector<float> x(batch * 5);
  for (auto& v : x) v = u(rng);
  std::vector<float> coeff(batch * 3);
  for (auto& v : coeff) v = u(rng);

  ForwardCache c;
  forward(net, x, batch, c);
  std::vector<float> g(net.parameter_count(), 0.0f);
  std::vector<float> gin;
  backward(net, c, coeff, g, &gin);

  std::vector<double> params(net.parameters().begin(), net.parameters().end());
  auto loss = [&](const std::vector<double>& ps, const std::vector<double>& xs) {
    double s = 0.0;
    for (int n = 0; n < batch; ++n) {
      const std::vector<double> xn(xs.begin() + n * 5, xs.begin() + (n + 1) * 5);
      const auto y = reference_forward(net, ps, xn);
      for (int j = 0; j < 3; ++j) s += coeff[n * 3 + j] * y[j];
    }
    return s;
  };
  std::vector<double> xd(x.begin(), x.end());
  const double h = 1e-6;
  auto check = [&](double analytic, double fd, const char* what, std::size_t i) {
    const double denom = std::max(std::abs(fd), 1e-3);
    EXPECT_LT(std::abs(analytic - fd) / denom, 1e-4) << what << " " << i << " analytic " << analytic << " fd " << fd;
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto plus = params, minus = params;
    plus[i] += h;
    minus[i] -= h;
    check(g[i], (loss(plus, xd) - loss(minus, xd)) / (2 * h), "param", i);
  }
  for (std::size_t i = 0; i < xd.size(); ++i) {
    auto plus = xd, minus = xd;
    plus[i] += h;
    minus[i] -= h;
    check(gin[i], (loss(params, plus) - loss(params, minus)) / (2 * h), "input", i);
  }
}

TEST(Backward, ReluNetMatchesFiniteDifferences) { check_gradients(Activation::kRelu, 3); }
TEST(Backward, LeakyNetMatchesFiniteDifferences) { check_gradients(Activation::kLeakyRelu, 4); }
TEST(Backward, LinearNetMatchesFiniteDifferences) { check_gradients(Activation::kIdentity, 5); }

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<float> p{1.0f, -2.0f};
  AdamState s(2);
  adam_step(s, p, std::vector<float>{0.0f, 0.0f}, 0.01);
  EXPECT_EQ(p, (std::vector<float>{1.0f, -2.0f}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<float> p{0.5f};
  AdamState s(1);
  adam_step(s, p, std::vector<float>{1.0f}, 0.01);
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p[0], 0.5 - 0.01 / (1.0 + 1e-8), 1e-7);
}

TEST(Adam, ConstantGradientMovesMonotonically) {
  std::vector<float> p{0.0f};
  AdamState s(1);
  float last = p[0];
  for (int i = 0; i < 100; ++i) {
    adam_step(s, p, std::vector<float>{-0.3f}, 0.01);
    EXPECT_GT(p[0], last);
    last = p[0];
  }
}

TEST(Adam, NonFiniteGradientIsSkipped) {
  std::vector<float> p{1.0f, 2.0f};
  AdamState s(2);
  EXPECT_FALSE(adam_step(s, p, std::vector<float>{NAN, 1.0f}, 0.01));
  EXPECT_EQ(p, (std::vector<float>{1.0f, 2.0f}));
  EXPECT_EQ(s.skipped, 1);
  EXPECT_EQ(s.step, 0);
}

TEST(LrSchedule, WarmupStartsAtZero) { EXPECT_EQ(lr_schedule(0, 20000), 0.0); }

TEST(LrSchedule, ReferenceMarks) {
  EXPECT_NEAR(lr_schedule(500, 20000), 0.005, 1e-15);
  EXPECT_DOUBLE_EQ(lr_schedule(1000, 20000), 0.01);
  EXPECT_DOUBLE_EQ(lr_schedule(8999, 20000), 0.01);
  EXPECT_NEAR(lr_schedule(9000, 20000), 0.01 * 0.33, 1e-15);
  EXPECT_NEAR(lr_schedule(10000, 20000), 0.01 * 0.33, 1e-15);
  EXPECT_NEAR(lr_schedule(12000, 20000), 0.01 * 0.33 * 0.33, 1e-15);
  EXPECT_NEAR(lr_schedule(17000, 20000), 0.01 * std::pow(0.33, 4), 1e-15);
  EXPECT_NEAR(lr_schedule(19999, 20000), 0.01 * std::pow(0.33, 5), 1e-15);
}

TEST(LrSchedule, ScaledRun) {
  EXPECT_NEAR(lr_schedule(500, 1000), 0.01 * 0.33, 1e-15);
  EXPECT_NEAR(lr_schedule(999, 1000), 0.01 * std::pow(0.33, 5), 1e-15);
}

}  // namespace
}  // namespace cnc
