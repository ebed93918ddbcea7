// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/entropy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cnc {

namespace {

void check_inputs(double p, int theta) {
  if (!(p >= kProbEps && p <= 1.0 - kProbEps)) throw std::domain_error("probability outside clamp range");
  if (theta != 1 && theta != -1) throw std::domain_error("theta must be -1 or +1");
}

}  // namespace

double bit_estimate(double p, int theta) {
  check_inputs(p, theta);
  return theta > 0 ? -std::log2(p) : -std::log2(1.0 - p);
}

BitGradients bit_gradients(double p, int theta) {
  check_inputs(p, theta);
  const double ln2 = std::numbers::ln2;
  BitGradients g;
  g.d_theta = 0.5 * std::log2(1.0 / p - 1.0);
  g.d_p = theta > 0 ? -1.0 / (p * ln2) : -1.0 / ((p - 1.0) * ln2);
  return g;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

EntropyLossReport entropy_loss(std::span<const std::int8_t> thetas, std::span<const double> probs,
                               std::uint64_t valid_count, std::uint64_t total_count, std::span<double> d_p,
                               std::span<double> d_theta) {
  if (thetas.size() != probs.size()) throw std::invalid_argument("entropy_loss: size mismatch");
  if (!d_p.empty() && d_p.size() != probs.size()) throw std::invalid_argument("entropy_loss: d_p size mismatch");
  if (!d_theta.empty() && d_theta.size() != probs.size())
    throw std::invalid_argument("entropy_loss: d_theta size mismatch");
  EntropyLossReport r;
  r.valid_count = valid_count;
  r.total_count = total_count;
  r.sampled = thetas.size();
  if (thetas.empty() || valid_count == 0) {
    r.empty = true;
    return r;
  }
  const double scale = static_cast<double>(valid_count) / static_cast<double>(thetas.size());
  std::vector<double> bits(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    bits[i] = bit_estimate(probs[i], thetas[i]);
    if (!d_p.empty() || !d_theta.empty()) {
      const BitGradients g = bit_gradients(probs[i], thetas[i]);
      if (!d_p.empty()) d_p[i] = scale * g.d_p;
      if (!d_theta.empty()) d_theta[i] = scale * g.d_theta;
    }
  }
  r.total_bits = scale * pairwise_sum(bits);
  r.loss_value = total_count > 0 ? r.total_bits / static_cast<double>(total_count) : 0.0;
  return r;
}

double total_loss(double mse, const EntropyLossReport& report, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  if (report.total_count == 0) return mse;
  return mse + lambda * report.total_bits / static_cast<double>(report.total_count);
}

}  // namespace cnc
