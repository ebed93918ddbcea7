// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cnc/grid.hpp"

namespace cnc {

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(int resolution);

  int resolution() const { return res_; }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t occupied_count() const;

  bool occupied(int x, int y, int z) const { return cells_[index(x, y, z)] != 0; }
  void set(int x, int y, int z, bool value) { cells_[index(x, y, z)] = value ? 1 : 0; }
  std::span<const std::uint8_t> cells() const { return cells_; }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(res_) * (y + static_cast<std::size_t>(res_) * z);
  }

  // Cell containing a normalized point, clamped to the grid.
  std::array<int, 3> cell_of(std::span<const double> xyz) const;

  // u16 resolution followed by the cells as little-endian packed bits,
  // x fastest.
  std::vector<std::uint8_t> serialize() const;
  static OccupancyGrid deserialize(std::span<const std::uint8_t> bytes);

  bool operator==(const OccupancyGrid&) const = default;

 private:
  int res_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Raised when a scene has nothing to encode.
struct DegenerateSceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// |field| sampled on a 2x2x2 stencil per cell; occupied iff the max exceeds
// `threshold`. Throws DegenerateSceneError when no cell is occupied.
OccupancyGrid derive_occupancy(const std::function<double(double, double, double)>& magnitude, int resolution,
                               double threshold = 1e-2);

// Exact volume of the intersection between [lo, hi] and the occupied cells.
double occupied_volume(const OccupancyGrid& occ, const std::array<double, 3>& lo, const std::array<double, 3>& hi);

// Extent of the box around a vertex whose overlap with occupied space is the
// vertex's area of effect. kSupport spans the 2^d incident level cells
// (every cell whose interpolation reads the vertex); kDual is the half-cell
// box centred on the vertex.
enum class Footprint : std::uint8_t { kSupport, kDual };

// Area of effect of a vertex. For 2D levels the footprint square is extruded
// through the full unit interval along the projection axis.
double aoe(const LevelSpec& level, const Vertex& v, const OccupancyGrid& occ,
           Footprint footprint = Footprint::kSupport);

// Per-vertex AOE for a whole level, indexed by linear vertex id.
std::vector<float> level_aoe(const LevelSpec& level, const OccupancyGrid& occ,
                             Footprint footprint = Footprint::kSupport);

// w_k = a_k / sum_j a_j. Throws InvalidSlotError when every a_k is zero.
struct InvalidSlotError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
std::vector<double> fusion_weights(std::span<const double> aoes);

// How a slot is judged to be coded. kAreaOfEffect: some vertex has AOE > 0.
// kCellMembership: some vertex lies inside an occupied cell (its column for
// 2D levels), which discards slots that interpolation still reads.
enum class ValidityRule : std::uint8_t { kAreaOfEffect, kCellMembership };

struct LevelGeometry {
  LevelSpec spec;
  InverseHashMap inverse;
  // Fusion weight of each vertex before normalization: the AOE under
  // kAreaOfEffect, a 0/1 membership flag under kCellMembership.
  std::vector<float> vertex_weight;
  std::vector<std::uint8_t> slot_valid;
  std::vector<std::uint32_t> valid_slots;  // ascending

  bool valid(std::uint32_t slot) const { return slot_valid[slot] != 0; }
  // Normalized fusion weights of a slot's weighted vertices, along with
  // their linear indices. Throws InvalidSlotError for invalid slots.
  void slot_weights(std::uint32_t slot, std::vector<std::uint32_t>& vertices, std::vector<double>& weights) const;
};

struct GeometryOptions {
  ValidityRule rule = ValidityRule::kAreaOfEffect;
  Footprint footprint = Footprint::kSupport;
};

LevelGeometry build_level_geometry(const LevelSpec& level, const OccupancyGrid& occ,
                                   const GeometryOptions& options = {});

struct SlotValidity {
  std::vector<std::vector<std::uint8_t>> masks;
  std::uint64_t valid_theta = 0;  // valid slots x F, summed over levels
  std::uint64_t total_theta = 0;  // M: every theta including invalid ones
};

SlotValidity validity_masks(std::span<const LevelGeometry> levels);

// Projected voxel features: per plane, per feature dimension, the frequency of
// +1 among the finest 3D level's vertices along the projection axis. Only
// vertices with positive weight contribute; empty columns read 0.5.
struct Pvf {
  int resolution = 0;
  int feature_dim = 0;
  std::array<std::vector<float>, 3> planes;

  std::size_t stride() const { return static_cast<std::size_t>(resolution) + 1; }
  float at(Plane plane, int u, int v, int dim) const {
    return planes[static_cast<int>(plane)][(u + stride() * v) * feature_dim + dim];
  }
  // Bilinear sample at normalized (u, v).
  void sample(Plane plane, std::span<const double> uv, std::span<float> out) const;
};

Pvf project_pvf(const LevelEmbedding& finest, std::span<const float> vertex_weight);

}  // namespace cnc
