// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

namespace cnc {

// Every probability that reaches the estimator or the coder lies in
// [kProbEps, 1 - kProbEps].
inline constexpr double kProbEps = 1e-6;

inline double clamp_probability(double p) {
  return p < kProbEps ? kProbEps : (p > 1.0 - kProbEps ? 1.0 - kProbEps : p);
}

// Bits to code theta in {-1, +1} under P(theta = +1) = p:
//   -((1 + theta) / 2) log2(p) - ((1 - theta) / 2) log2(1 - p).
// Throws std::domain_error when p is outside the clamp range or theta is not
// +-1.
double bit_estimate(double p, int theta);

struct BitGradients {
  double d_theta;  // 0.5 * log2(1/p - 1), independent of theta
  double d_p;      // -1/(p ln2) for theta = +1, -1/((p - 1) ln2) for theta = -1
};

BitGradients bit_gradients(double p, int theta);

// Summation with a fixed pairwise tree so results do not depend on how the
// caller batched the values.
double pairwise_sum(std::span<const double> values);

struct EntropyLossReport {
  double total_bits = 0.0;       // estimated bits over all valid thetas
  std::uint64_t valid_count = 0; // valid thetas in the full embedding set
  std::uint64_t sampled = 0;     // thetas actually evaluated
  std::uint64_t total_count = 0; // M, thetas including invalid ones
  double loss_value = 0.0;       // total_bits / M
  bool empty = false;            // no valid theta was supplied
};

// Estimated bits over a sample of valid thetas, scaled by
// valid_count / sampled so the total is unbiased for the full set. When
// d_p / d_theta are non-empty they receive d(total_bits)/dp_i and
// d(total_bits)/dtheta_i.
EntropyLossReport entropy_loss(std::span<const std::int8_t> thetas, std::span<const double> probs,
                               std::uint64_t valid_count, std::uint64_t total_count, std::span<double> d_p = {},
                               std::span<double> d_theta = {});

// L_mse + lambda * total_bits / M. Throws std::invalid_argument for negative
// lambda.
double total_loss(double mse, const EntropyLossReport& report, double lambda);

}  // namespace cnc
