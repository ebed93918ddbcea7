// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/context.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cnc/entropy.hpp"
#include "cnc/parallel.hpp"

namespace cnc {

namespace {

constexpr std::size_t kSlotBlock = 1024;

double sigmoid(float logit) { return 1.0 / (1.0 + std::exp(-static_cast<double>(logit))); }

std::uint64_t mix_seed(std::uint64_t seed, const FuserKey& key) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ull * (1 + static_cast<std::uint64_t>(key.kind)));
  x ^= 0xbf58476d1ce4e5b9ull * (static_cast<std::uint64_t>(key.context_levels) + 1);
  x ^= key.uses_pvf ? 0x94d049bb133111ebull : 0;
  return x;
}

// Probabilities for a run of valid slots, written to out (slots.size() x F).
void compute_slot_block(const ContextInputs& in, std::span<const std::uint32_t> slots, std::span<double> out) {
  const LevelGeometry& g = *in.geometry;
  const int f = g.spec.feature_dim;
  if (!in.plan.use_fuser) {
    const double p = clamp_probability(in.f_g);
    std::fill(out.begin(), out.end(), p);
    return;
  }
  const ContextFuser& fuser = *in.fuser;
  if (fuser.key.uses_pvf != (in.pvf != nullptr))
    throw std::logic_error("context: PVF presence disagrees with the fuser key");
  const int width = fuser.input_width();
  std::vector<std::uint32_t> vertices;
  std::vector<double> weights;
  std::vector<std::size_t> first(slots.size() + 1, 0);
  std::vector<std::uint32_t> all_vertices;
  std::vector<double> all_weights;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    g.slot_weights(slots[i], vertices, weights);
    all_vertices.insert(all_vertices.end(), vertices.begin(), vertices.end());
    all_weights.insert(all_weights.end(), weights.begin(), weights.end());
    first[i + 1] = all_vertices.size();
  }
  const std::size_t n = all_vertices.size();
  std::vector<float> contexts(n * width);
  for (std::size_t k = 0; k < n; ++k) {
    const auto pos = vertex_position(g.spec, all_vertices[k]);
    assemble_level_context(std::span<const double>(pos.data(), g.spec.dims), in.previous, in.context_levels, in.f_g,
                           in.pvf, g.spec.plane, std::span<float>(contexts.data() + k * width, width));
  }
  ForwardCache cache;
  forward(fuser.net, contexts, static_cast<int>(n), cache);
  const auto logits = cache.output();
  std::vector<double> vprobs(n * f);
  for (std::size_t k = 0; k < n * f; ++k) vprobs[k] = sigmoid(logits[k]);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const std::size_t a = first[i], b = first[i + 1];
    fuse_probabilities(std::span<const double>(all_weights.data() + a, b - a),
                       std::span<const double>(vprobs.data() + a * f, (b - a) * f), f,
                       out.subspan(i * f, f));
  }
}

}  // namespace

ContextFuser::ContextFuser(const FuserKey& k, int f) : key(k), feature_dim(f) {
  const int in = input_width(k, f);
  if (k.kind == FuserKind::k3D)
    net = DenseNet({in, kFuserHidden, kFuserHidden, f}, Activation::kLeakyRelu, Activation::kIdentity);
  else
    net = DenseNet({in, f}, Activation::kLeakyRelu, Activation::kIdentity);
}

const char* ablation_name(ContextAblation a) {
  switch (a) {
    case ContextAblation::kNone: return "none";
    case ContextAblation::k2D: return "2d";
    case ContextAblation::k3D: return "3d";
    case ContextAblation::kDim: return "dim";
    case ContextAblation::kAll: return "all";
  }
  return "?";
}

ContextAblation parse_ablation(const std::string& name) {
  if (name == "none") return ContextAblation::kNone;
  if (name == "2d") return ContextAblation::k2D;
  if (name == "3d") return ContextAblation::k3D;
  if (name == "dim") return ContextAblation::kDim;
  if (name == "all") return ContextAblation::kAll;
  throw std::invalid_argument("unknown context ablation '" + name + "'");
}

LevelPlan plan_level(const LevelSpec& level, const ContextOptions& options) {
  LevelPlan plan;
  const int effective = std::min(options.context_levels, level.index - 1);
  const ContextAblation a = options.ablation;
  if (level.dims == 3) {
    if (a == ContextAblation::k3D || a == ContextAblation::kAll) return plan;
    if (options.disable_from_level > 0 && level.index >= options.disable_from_level) return plan;
    if (effective < 1) return plan;
    plan.use_fuser = true;
    plan.key = {FuserKind::k3D, effective, false};
    return plan;
  }
  if (a == ContextAblation::k2D || a == ContextAblation::kAll) return plan;
  const bool pvf = a != ContextAblation::kDim;
  if (effective < 1 && !pvf) return plan;
  plan.use_fuser = true;
  plan.key = {FuserKind::k2D, std::max(effective, 0), pvf};
  return plan;
}

FuserBank make_fuser_bank(std::span<const LevelSpec> levels, const ContextOptions& options, int feature_dim,
                          std::uint64_t seed) {
  FuserBank bank;
  for (const auto& level : levels) {
    const LevelPlan plan = plan_level(level, options);
    if (!plan.use_fuser || bank.contains(plan.key)) continue;
    ContextFuser fuser(plan.key, feature_dim);
    fuser.net.init_kaiming_uniform(mix_seed(seed, plan.key));
    bank.emplace(plan.key, std::move(fuser));
  }
  return bank;
}

std::optional<double> frequency(const LevelEmbedding& level, const LevelGeometry& geometry) {
  const int f = level.spec.feature_dim;
  std::uint64_t plus = 0, total = 0;
  for (std::uint32_t s : geometry.valid_slots) {
    const std::int8_t* v = level.signs.data() + static_cast<std::size_t>(s) * f;
    for (int j = 0; j < f; ++j) plus += v[j] > 0;
    total += f;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(plus) / static_cast<double>(total);
}

std::uint16_t quantize_frequency(double f) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(f, 0.0, 1.0) * 65535.0));
}

void assemble_level_context(std::span<const double> pos, std::span<const LevelEmbedding> previous,
                            int context_levels, double f_g, const Pvf* pvf, Plane plane, std::span<float> out) {
  const int used = std::min<int>(context_levels, static_cast<int>(previous.size()));
  if (used < 1 && pvf == nullptr) throw std::logic_error("assemble_level_context: no context available");
  int f = 0;
  if (!previous.empty()) f = previous.front().spec.feature_dim;
  if (pvf) f = pvf->feature_dim;
  const std::size_t width = static_cast<std::size_t>(f) * used + 1 + (pvf ? f : 0);
  if (out.size() != width) throw std::invalid_argument("assemble_level_context: output width mismatch");
  std::size_t o = 0;
  for (std::size_t j = previous.size() - used; j < previous.size(); ++j) {
    interpolate(previous[j], pos, out.subspan(o, f));
    o += f;
  }
  out[o++] = static_cast<float>(f_g);
  if (pvf) pvf->sample(plane, pos, out.subspan(o, f));
}

void predict_vertex_prob_3d(const ContextFuser& fuser, std::span<const float> context, std::span<double> p) {
  if (fuser.key.kind != FuserKind::k3D) throw std::invalid_argument("predict_vertex_prob_3d: not a 3D fuser");
  if (static_cast<int>(context.size()) != fuser.input_width())
    throw std::invalid_argument("predict_vertex_prob_3d: context width mismatch");
  if (static_cast<int>(p.size()) != fuser.feature_dim) throw std::invalid_argument("predict_vertex_prob_3d: bad output");
  ForwardCache cache;
  forward(fuser.net, context, 1, cache);
  for (int j = 0; j < fuser.feature_dim; ++j) p[j] = clamp_probability(sigmoid(cache.output()[j]));
}

void predict_vertex_prob_2d(const ContextFuser& fuser, std::span<const float> context,
                            std::span<const float> pvf_sample, std::span<double> p) {
  if (fuser.key.kind != FuserKind::k2D) throw std::invalid_argument("predict_vertex_prob_2d: not a 2D fuser");
  std::vector<float> input(context.begin(), context.end());
  input.insert(input.end(), pvf_sample.begin(), pvf_sample.end());
  if (static_cast<int>(input.size()) != fuser.input_width())
    throw std::invalid_argument("predict_vertex_prob_2d: context width mismatch");
  if (static_cast<int>(p.size()) != fuser.feature_dim) throw std::invalid_argument("predict_vertex_prob_2d: bad output");
  ForwardCache cache;
  forward(fuser.net, input, 1, cache);
  for (int j = 0; j < fuser.feature_dim; ++j) p[j] = clamp_probability(sigmoid(cache.output()[j]));
}

void fuse_probabilities(std::span<const double> weights, std::span<const double> vertex_probs, int feature_dim,
                        std::span<double> out) {
  if (vertex_probs.size() != weights.size() * feature_dim || static_cast<int>(out.size()) != feature_dim)
    throw std::invalid_argument("fuse_probabilities: shape mismatch");
  for (int j = 0; j < feature_dim; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) acc += weights[k] * vertex_probs[k * feature_dim + j];
    out[j] = clamp_probability(acc);
  }
}

std::vector<double> slot_probability(const ContextInputs& in, std::uint32_t slot) {
  if (!in.geometry->valid(slot)) throw InvalidSlotError("slot_probability: invalid slot");
  std::vector<double> out(in.geometry->spec.feature_dim);
  const std::uint32_t slots[1] = {slot};
  compute_slot_block(in, slots, out);
  return out;
}

std::vector<double> level_slot_probabilities(const ContextInputs& in, int threads) {
  const LevelGeometry& g = *in.geometry;
  if (in.plan.use_fuser && in.fuser == nullptr) throw std::invalid_argument("level_slot_probabilities: fuser missing");
  const std::size_t f = g.spec.feature_dim;
  const std::size_t n = g.valid_slots.size();
  std::vector<double> out(n * f);
  const std::size_t blocks = (n + kSlotBlock - 1) / kSlotBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t a = b * kSlotBlock;
    const std::size_t e = std::min(n, a + kSlotBlock);
    compute_slot_block(in, std::span<const std::uint32_t>(g.valid_slots.data() + a, e - a),
                       std::span<double>(out.data() + a * f, (e - a) * f));
  });
  return out;
}

}  // namespace cnc
