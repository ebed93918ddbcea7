// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/rate.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "cnc/entropy.hpp"
#include "cnc/parallel.hpp"

namespace cnc {

namespace {

constexpr std::size_t kRateChunk = 16;

struct ChunkResult {
  std::vector<double> bits;  // per sample
  std::map<FuserKey, std::vector<float>> grads;
};

void rate_chunk(const FuserBank& bank, std::span<const RateLevel> levels, std::span<const SlotRef> samples,
                std::span<double> d_theta, bool want_grads, ChunkResult& out) {
  std::vector<std::uint32_t> vertices;
  std::vector<double> weights;
  std::vector<float> contexts;
  std::vector<float> upstream;
  std::vector<double> sig;
  ForwardCache cache;
  out.bits.assign(samples.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RateLevel& rl = levels[samples[i].level];
    const ContextInputs& in = rl.inputs;
    const LevelGeometry& g = *in.geometry;
    const int f = g.spec.feature_dim;
    const std::uint32_t slot = samples[i].slot;
    double* dt = d_theta.data() + i * f;
    double bits = 0.0;
    if (!in.plan.use_fuser) {
      if (!g.valid(slot)) throw InvalidSlotError("rate: invalid slot");
      const double p = clamp_probability(in.f_g);
      for (int j = 0; j < f; ++j) {
        const int theta = static_cast<int>(rl.embedding->sign(slot, j));
        bits += bit_estimate(p, theta);
        dt[j] = bit_gradients(p, theta).d_theta;
      }
      out.bits[i] = bits;
      continue;
    }
    const auto it = bank.find(in.plan.key);
    if (it == bank.end()) throw std::logic_error("rate: fuser missing for level");
    const ContextFuser& fuser = it->second;
    if (fuser.key.uses_pvf != (in.pvf != nullptr)) throw std::logic_error("rate: PVF presence disagrees with key");
    g.slot_weights(slot, vertices, weights);
    const std::size_t k_count = vertices.size();
    const int width = fuser.input_width();
    contexts.resize(k_count * width);
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto pos = vertex_position(g.spec, vertices[k]);
      assemble_level_context(std::span<const double>(pos.data(), g.spec.dims), in.previous, in.context_levels,
                             in.f_g, in.pvf, g.spec.plane, std::span<float>(contexts.data() + k * width, width));
    }
    forward(fuser.net, contexts, static_cast<int>(k_count), cache);
    const auto logits = cache.output();
    sig.resize(k_count * f);
    for (std::size_t k = 0; k < k_count * f; ++k) sig[k] = 1.0 / (1.0 + std::exp(-static_cast<double>(logits[k])));
    if (want_grads) upstream.assign(k_count * f, 0.0f);
    for (int j = 0; j < f; ++j) {
      double raw = 0.0;
      for (std::size_t k = 0; k < k_count; ++k) raw += weights[k] * sig[k * f + j];
      const double p = clamp_probability(raw);
      const int theta = static_cast<int>(rl.embedding->sign(slot, j));
      bits += bit_estimate(p, theta);
      const BitGradients bg = bit_gradients(p, theta);
      dt[j] = bg.d_theta;
      if (want_grads && p == raw) {
        for (std::size_t k = 0; k < k_count; ++k) {
          const double s = sig[k * f + j];
          upstream[k * f + j] = static_cast<float>(bg.d_p * weights[k] * s * (1.0 - s));
        }
      }
    }
    out.bits[i] = bits;
    if (want_grads) {
      auto& grad = out.grads[fuser.key];
      if (grad.empty()) grad.assign(fuser.net.parameter_count(), 0.0f);
      backward(fuser.net, cache, upstream, grad);
    }
  }
}

}  // namespace

RateBatch rate_batch(const FuserBank& bank, std::span<const RateLevel> levels, std::span<const SlotRef> samples,
                     int threads, bool fuser_grads) {
  RateBatch out;
  std::vector<std::size_t> offset(samples.size() + 1, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].level >= levels.size()) throw std::out_of_range("rate_batch: level index");
    offset[i + 1] = offset[i] + levels[samples[i].level].inputs.geometry->spec.feature_dim;
  }
  out.thetas = offset.back();
  out.d_theta.assign(out.thetas, 0.0);
  const std::size_t chunks = (samples.size() + kRateChunk - 1) / kRateChunk;
  std::vector<ChunkResult> results(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t a = c * kRateChunk;
    const std::size_t b = std::min(samples.size(), a + kRateChunk);
    rate_chunk(bank, levels, samples.subspan(a, b - a),
               std::span<double>(out.d_theta.data() + offset[a], offset[b] - offset[a]), fuser_grads, results[c]);
  });
  std::vector<double> bits;
  bits.reserve(samples.size());
  for (auto& r : results) {
    bits.insert(bits.end(), r.bits.begin(), r.bits.end());
    for (auto& [key, grad] : r.grads) {
      auto& acc = out.fuser_grads[key];
      if (acc.empty()) acc.assign(grad.size(), 0.0f);
      for (std::size_t i = 0; i < grad.size(); ++i) acc[i] += grad[i];
    }
  }
  out.bits = pairwise_sum(bits);
  return out;
}

std::vector<SlotRef> sample_valid_slots(std::span<const RateLevel> levels, std::size_t count, std::mt19937_64& rng,
                                        const std::vector<bool>& filter) {
  std::vector<std::uint64_t> cumulative(levels.size() + 1, 0);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const bool keep = filter.empty() || filter[i];
    cumulative[i + 1] = cumulative[i] + (keep ? levels[i].inputs.geometry->valid_slots.size() : 0);
  }
  std::vector<SlotRef> out;
  if (cumulative.back() == 0) return out;
  out.reserve(count);
  std::uniform_int_distribution<std::uint64_t> pick(0, cumulative.back() - 1);
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint64_t u = pick(rng);
    const std::size_t level = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin() - 1;
    out.push_back({static_cast<std::uint32_t>(level),
                   levels[level].inputs.geometry->valid_slots[u - cumulative[level]]});
  }
  return out;
}

double fit_fusers(FuserBank& bank, std::span<const RateLevel> levels, const FitOptions& options) {
  std::vector<bool> filter(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) filter[i] = levels[i].inputs.plan.use_fuser;
  std::map<FuserKey, AdamState> adam;
  for (auto& [key, fuser] : bank) adam.emplace(key, AdamState(fuser.net.parameter_count()));
  std::mt19937_64 rng(options.seed);
  double last = 0.0;
  for (int it = 0; it < options.iterations; ++it) {
    const auto samples = sample_valid_slots(levels, options.samples, rng, filter);
    if (samples.empty()) return 0.0;
    RateBatch batch = rate_batch(bank, levels, samples, options.threads, true);
    last = batch.bits / static_cast<double>(batch.thetas);
    const double lr = lr_schedule(it, options.iterations, options.learning_rate);
    for (auto& [key, grad] : batch.fuser_grads) {
      for (float& g : grad) g /= static_cast<float>(batch.thetas);
      adam_step(adam.at(key), bank.at(key).net.mutable_parameters(), grad, lr);
    }
  }
  return last;
}

}  // namespace cnc
