// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cnc/grid.hpp"
#include "cnc/nn.hpp"
#include "cnc/occupancy.hpp"

namespace cnc {

enum class FuserKind : std::uint8_t { k3D = 0, k2D = 1 };

// Fusers are shared by every level with the same key.
struct FuserKey {
  FuserKind kind = FuserKind::k3D;
  int context_levels = 0;  // effective L_c
  bool uses_pvf = false;

  auto operator<=>(const FuserKey&) const = default;
};

// Tiny probability predictor. 3D: (F*Lc + 1) -> 32 -> 32 -> F with LeakyReLU
// between layers. 2D: a single affine map (F*Lc + 1 [+ F]) -> F. The net
// emits logits; probabilities are sigmoid(logit) clamped to the coding range.
struct ContextFuser {
  FuserKey key;
  int feature_dim = 0;
  DenseNet net;

  ContextFuser() = default;
  ContextFuser(const FuserKey& key, int feature_dim);

  int input_width() const { return input_width(key, feature_dim); }
  static int input_width(const FuserKey& key, int feature_dim) {
    return feature_dim * key.context_levels + 1 + (key.uses_pvf ? feature_dim : 0);
  }
};

inline constexpr int kFuserHidden = 32;

using FuserBank = std::map<FuserKey, ContextFuser>;

// Which context models are switched off.
enum class ContextAblation : std::uint8_t {
  kNone = 0,  // level-wise 3D, level-wise 2D and dimension-wise all active
  k2D = 1,    // 2D levels fall back to f_G
  k3D = 2,    // 3D levels fall back to f_G
  kDim = 3,   // 2D levels lose the projected-voxel context
  kAll = 4,   // every level uses f_G
};

const char* ablation_name(ContextAblation a);
ContextAblation parse_ablation(const std::string& name);

struct ContextOptions {
  int context_levels = 3;      // L_c
  int disable_from_level = 0;  // L_d: 3D levels >= L_d use f_G; 0 disables the cut
  ContextAblation ablation = ContextAblation::kNone;
};

struct LevelPlan {
  bool use_fuser = false;
  FuserKey key;
};

LevelPlan plan_level(const LevelSpec& level, const ContextOptions& options);

// One fuser per distinct key among `levels`, Kaiming-initialized from `seed`.
FuserBank make_fuser_bank(std::span<const LevelSpec> levels, const ContextOptions& options, int feature_dim,
                          std::uint64_t seed);

// (# valid +1) / (# valid thetas); nullopt when the level has no valid slot.
std::optional<double> frequency(const LevelEmbedding& level, const LevelGeometry& geometry);

// f_G is carried as 16-bit fixed point.
std::uint16_t quantize_frequency(double f);
inline double dequantize_frequency(std::uint16_t q) { return q / 65535.0; }

// Context for a vertex at `pos`: interpolations of the last
// min(context_levels, previous.size()) entries of `previous` (coarse to fine),
// then f_G, then for 2D the PVF sample of `plane`. Throws std::logic_error
// when there is nothing to condition on.
void assemble_level_context(std::span<const double> pos, std::span<const LevelEmbedding> previous,
                            int context_levels, double f_g, const Pvf* pvf, Plane plane, std::span<float> out);

// Per-vertex probabilities in (0, 1) clamped to the coding range.
void predict_vertex_prob_3d(const ContextFuser& fuser, std::span<const float> context, std::span<double> p);
void predict_vertex_prob_2d(const ContextFuser& fuser, std::span<const float> context,
                            std::span<const float> pvf_sample, std::span<double> p);

// Everything a level's predictor may read: only levels coded before it.
struct ContextInputs {
  const LevelGeometry* geometry = nullptr;
  LevelPlan plan;
  const ContextFuser* fuser = nullptr;  // required when plan.use_fuser
  int context_levels = 3;
  double f_g = 0.5;
  std::span<const LevelEmbedding> previous;  // same group, coarse to fine
  const Pvf* pvf = nullptr;                  // 2D levels with a PVF context
};

// Hash fusion: p_j = sum_k w_k p_kj over a slot's positively weighted
// vertices, then clamped. Throws InvalidSlotError for invalid slots.
std::vector<double> slot_probability(const ContextInputs& in, std::uint32_t slot);

// Probabilities for every valid slot of a level, laid out as
// valid_slots.size() x F. Identical to slot_probability per slot for any
// thread count.
std::vector<double> level_slot_probabilities(const ContextInputs& in, int threads = 1);

// Raw fused probability for given per-vertex predictions (K x F).
void fuse_probabilities(std::span<const double> weights, std::span<const double> vertex_probs, int feature_dim,
                        std::span<double> out);

}  // namespace cnc
