// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "cnc/context.hpp"
#include "cnc/nn.hpp"

namespace cnc {

// A level as the rate term sees it. The fuser is looked up in the bank by
// the plan key; inputs.fuser is ignored.
struct RateLevel {
  const LevelEmbedding* embedding = nullptr;
  ContextInputs inputs;
};

struct SlotRef {
  std::uint32_t level = 0;
  std::uint32_t slot = 0;
};

struct RateBatch {
  double bits = 0.0;          // estimated bits over the sampled thetas
  std::uint64_t thetas = 0;   // sampled thetas
  std::vector<double> d_theta;  // d bits / d theta, samples x F
  std::map<FuserKey, std::vector<float>> fuser_grads;  // d bits / d params
};

// Estimated bits of the sampled slots under live fuser predictions, with
// gradients for the signs and (optionally) for the fusers. Contexts are
// treated as constants. Deterministic for any thread count.
RateBatch rate_batch(const FuserBank& bank, std::span<const RateLevel> levels, std::span<const SlotRef> samples,
                     int threads, bool fuser_grads);

// `count` draws, with replacement, uniform over every valid slot of the
// levels accepted by `filter` (all levels when empty).
std::vector<SlotRef> sample_valid_slots(std::span<const RateLevel> levels, std::size_t count, std::mt19937_64& rng,
                                        const std::vector<bool>& filter = {});

struct FitOptions {
  int iterations = 300;
  std::size_t samples = 2048;
  std::uint64_t seed = 1;
  double learning_rate = kBaseLearningRate;
  int threads = 1;
};

// Trains the fusers in `bank` on fixed signs to minimize mean estimated bits
// per theta over the fuser-coded levels. Returns the mean bits per theta of
// the last iteration.
double fit_fusers(FuserBank& bank, std::span<const RateLevel> levels, const FitOptions& options);

}  // namespace cnc
