// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cnc {

// Tri-plane axis pairs. The projection axis is the one missing from the name.
enum class Plane : std::uint8_t { kXY = 0, kXZ = 1, kYZ = 2 };

const char* plane_name(Plane plane);

struct GridConfig {
  int dims = 3;  // 3 for voxel levels, 2 for tri-plane levels
  int num_levels = 1;
  int min_res = 16;
  int max_res = 16;
  int table_size_log2 = 15;
  int feature_dim = 8;

  // Throws std::invalid_argument on any broken invariant.
  void validate() const;
};

// Geometric schedule round(min_res * b^(l-1)), b = (max/min)^(1/(L-1)).
std::vector<int> level_resolutions(const GridConfig& cfg);

// A resolution level has `resolution` cells and `resolution + 1` vertices per
// axis. Vertex v maps to normalized coordinate v / resolution.
struct LevelSpec {
  int dims = 3;
  Plane plane = Plane::kXY;  // meaningful only when dims == 2
  int index = 1;             // 1-based, coarse to fine within its group
  int resolution = 1;
  int feature_dim = 1;
  std::uint32_t table_size = 1;
  bool hashed = false;

  std::uint32_t verts_per_axis() const { return static_cast<std::uint32_t>(resolution) + 1; }
  std::uint64_t vertex_count() const;
  std::size_t theta_count() const { return static_cast<std::size_t>(table_size) * feature_dim; }
};

std::vector<LevelSpec> make_levels(const GridConfig& cfg, Plane plane = Plane::kXY);

using Vertex = std::array<std::uint32_t, 3>;  // z unused for 2D levels

std::uint64_t vertex_linear_index(const LevelSpec& level, const Vertex& v);
Vertex vertex_from_linear(const LevelSpec& level, std::uint64_t linear);

// Row-major index on dense levels; XOR of prime-multiplied coordinates modulo
// the table size on hashed levels. Throws std::out_of_range for vertices
// outside the lattice.
std::uint32_t spatial_hash(const LevelSpec& level, const Vertex& v);

// Hash of a vertex given by linear index; no bounds check.
std::uint32_t slot_of_linear(const LevelSpec& level, std::uint64_t linear);

// Slot -> vertices lookup, stored as CSR over linear vertex indices. Within a
// slot the vertices are in ascending linear order.
class InverseHashMap {
 public:
  InverseHashMap() = default;
  InverseHashMap(std::vector<std::uint64_t> offsets, std::vector<std::uint32_t> vertices)
      : offsets_(std::move(offsets)), vertices_(std::move(vertices)) {}

  std::size_t slot_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t collisions(std::uint32_t slot) const { return offsets_[slot + 1] - offsets_[slot]; }
  std::span<const std::uint32_t> vertices(std::uint32_t slot) const {
    return {vertices_.data() + offsets_[slot], collisions(slot)};
  }
  std::size_t total_vertices() const { return vertices_.size(); }

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> vertices_;
};

InverseHashMap build_inverse_map(const LevelSpec& level);

// Latent table plus its binarized view. signs[i] = +1 iff latent[i] >= 0.
struct LevelEmbedding {
  LevelSpec spec;
  std::vector<float> latent;       // table_size x feature_dim, row-major
  std::vector<std::int8_t> signs;  // same layout, values in {-1, +1}

  static LevelEmbedding zeros(const LevelSpec& spec);

  void refresh_signs();
  float sign(std::uint32_t slot, int dim) const {
    return signs[static_cast<std::size_t>(slot) * spec.feature_dim + dim];
  }
};

// Fills latents uniformly in [-scale, scale].
void init_latents(LevelEmbedding& level, std::uint64_t seed, float scale = 1e-4f);

inline std::int8_t binarize(float latent) { return latent >= 0.0f ? 1 : -1; }
void binarize(std::span<const float> latent, std::span<std::int8_t> signs);

// Straight-through backward of sign(): hard-tanh surrogate.
inline float binarize_backward(float latent, float upstream) {
  return (latent >= -1.0f && latent <= 1.0f) ? upstream : 0.0f;
}

// The 2^d lattice corners around a point and their multilinear weights.
struct Corners {
  std::array<std::uint64_t, 8> vertex{};  // linear vertex index
  std::array<std::uint32_t, 8> slot{};
  std::array<double, 8> weight{};
  int count = 0;
};

// `pos` holds `level.dims` normalized coordinates, clamped to [0, 1].
Corners corners_at(const LevelSpec& level, std::span<const double> pos);

// Multilinear blend of the corner sign vectors; out has feature_dim entries.
void interpolate(const LevelEmbedding& level, std::span<const double> pos, std::span<float> out);

// Normalized position of a vertex (dims entries).
std::array<double, 3> vertex_position(const LevelSpec& level, std::uint64_t linear);

// The (u, v) coordinates of a 3D point projected onto a plane.
inline std::array<double, 2> project_to_plane(Plane plane, std::span<const double> xyz) {
  switch (plane) {
    case Plane::kXY: return {xyz[0], xyz[1]};
    case Plane::kXZ: return {xyz[0], xyz[2]};
    case Plane::kYZ: return {xyz[1], xyz[2]};
  }
  return {0.0, 0.0};
}

}  // namespace cnc
