// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cnc/context.hpp"
#include "cnc/grid.hpp"
#include "cnc/nn.hpp"
#include "cnc/occupancy.hpp"

namespace cnc {

struct NetShape {
  int hidden_layers = 2;
  int hidden_width = 64;
  int channels = 1;
};

// Everything that describes a trained (or decoded) feature field. Levels are
// stored flat: the 3D levels coarse to fine, then the xy, xz and yz planes,
// each coarse to fine. Coding follows the same order.
struct FieldModel {
  GridConfig grid3d;
  GridConfig grid2d;
  ContextOptions context;
  OccupancyGrid occupancy;
  std::vector<LevelEmbedding> levels;
  FuserBank fusers;
  DenseNet net;

  int feature_dim() const { return grid3d.feature_dim; }
  int levels_3d() const { return grid3d.num_levels; }
  int levels_2d() const { return grid2d.num_levels; }
  int finest_3d() const { return levels_3d() - 1; }
  // Start of the group (3D or one plane) a flat level belongs to.
  std::size_t group_begin(std::size_t level) const;
  // Same-group levels coded before `level`.
  std::span<const LevelEmbedding> previous(std::size_t level) const {
    const std::size_t b = group_begin(level);
    return std::span<const LevelEmbedding>(levels.data() + b, level - b);
  }
  int reconstruction_width() const { return feature_dim() * (levels_3d() + 3 * levels_2d()); }
  NetShape net_shape() const;
};

std::vector<LevelSpec> model_level_specs(const GridConfig& grid3d, const GridConfig& grid2d);

// Allocates zero embeddings, fusers and a reconstruction net for the given
// configs; parameters are initialized from `seed`.
FieldModel make_field_model(const GridConfig& grid3d, const GridConfig& grid2d, const ContextOptions& context,
                            const NetShape& net, OccupancyGrid occupancy, std::uint64_t seed);

DenseNet make_reconstruction_net(int input_width, const NetShape& shape);

struct FieldGeometry {
  GeometryOptions options;
  std::vector<LevelGeometry> levels;
  SlotValidity validity;
};

FieldGeometry build_field_geometry(const FieldModel& model, const GeometryOptions& options = {}, int threads = 1);

// Inputs for predicting level `level` of `model`. `pvf` must be the
// projection of the finest 3D level whenever the level's plan uses it.
ContextInputs context_inputs(const FieldModel& model, const FieldGeometry& geometry, std::size_t level, double f_g,
                             const Pvf* pvf);

// Concatenated per-level features at a 3D point (reconstruction_width()).
void gather_features(const FieldModel& model, std::span<const double> xyz, std::span<float> out);

}  // namespace cnc
