// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cnc {

namespace {

constexpr std::uint32_t kPrimes[3] = {1u, 2654435761u, 805459861u};

}  // namespace

const char* plane_name(Plane plane) {
  switch (plane) {
    case Plane::kXY: return "xy";
    case Plane::kXZ: return "xz";
    case Plane::kYZ: return "yz";
  }
  return "?";
}

void GridConfig::validate() const {
  if (dims != 2 && dims != 3) throw std::invalid_argument("grid dims must be 2 or 3");
  if (num_levels < 1) throw std::invalid_argument("grid needs at least one level");
  if (min_res < 1) throw std::invalid_argument("min_res must be positive");
  if (max_res < min_res) throw std::invalid_argument("max_res must be >= min_res");
  if (num_levels > 1 && max_res == min_res)
    throw std::invalid_argument("multi-level grid needs max_res > min_res");
  if (table_size_log2 < 1 || table_size_log2 > 30)
    throw std::invalid_argument("table_size_log2 out of range [1, 30]");
  if (feature_dim != 1 && feature_dim != 2 && feature_dim != 4 && feature_dim != 8)
    throw std::invalid_argument("feature_dim must be one of 1, 2, 4, 8");
  const double verts = std::pow(static_cast<double>(max_res) + 1.0, dims);
  if (verts > 4.0e9) throw std::invalid_argument("max_res too large for 32-bit vertex indices");
}

std::vector<int> level_resolutions(const GridConfig& cfg) {
  if (cfg.max_res < cfg.min_res) throw std::invalid_argument("max_res must be >= min_res");
  if (cfg.num_levels < 1) throw std::invalid_argument("grid needs at least one level");
  std::vector<int> res(cfg.num_levels);
  if (cfg.num_levels == 1) {
    res[0] = cfg.min_res;
    return res;
  }
  const double growth = std::pow(static_cast<double>(cfg.max_res) / cfg.min_res,
                                 1.0 / (cfg.num_levels - 1));
  for (int l = 0; l < cfg.num_levels; ++l)
    res[l] = static_cast<int>(std::lround(cfg.min_res * std::pow(growth, l)));
  res.front() = cfg.min_res;
  res.back() = cfg.max_res;
  for (int l = 1; l < cfg.num_levels; ++l) {
    if (res[l] <= res[l - 1])
      throw std::invalid_argument("resolution schedule is not strictly increasing; use fewer levels");
  }
  return res;
}

std::uint64_t LevelSpec::vertex_count() const {
  std::uint64_t n = 1;
  for (int d = 0; d < dims; ++d) n *= verts_per_axis();
  return n;
}

std::vector<LevelSpec> make_levels(const GridConfig& cfg, Plane plane) {
  cfg.validate();
  const auto res = level_resolutions(cfg);
  const std::uint64_t cap = std::uint64_t{1} << cfg.table_size_log2;
  std::vector<LevelSpec> levels;
  levels.reserve(res.size());
  for (std::size_t l = 0; l < res.size(); ++l) {
    LevelSpec spec;
    spec.dims = cfg.dims;
    spec.plane = plane;
    spec.index = static_cast<int>(l) + 1;
    spec.resolution = res[l];
    spec.feature_dim = cfg.feature_dim;
    const std::uint64_t verts = spec.vertex_count();
    spec.hashed = verts > cap;
    spec.table_size = static_cast<std::uint32_t>(std::min(cap, verts));
    levels.push_back(spec);
  }
  return levels;
}

std::uint64_t vertex_linear_index(const LevelSpec& level, const Vertex& v) {
  const std::uint64_t n = level.verts_per_axis();
  std::uint64_t idx = v[0] + n * v[1];
  if (level.dims == 3) idx += n * n * v[2];
  return idx;
}

Vertex vertex_from_linear(const LevelSpec& level, std::uint64_t linear) {
  const std::uint64_t n = level.verts_per_axis();
  Vertex v{};
  v[0] = static_cast<std::uint32_t>(linear % n);
  linear /= n;
  v[1] = static_cast<std::uint32_t>(linear % n);
  if (level.dims == 3) v[2] = static_cast<std::uint32_t>(linear / n);
  return v;
}

std::uint32_t spatial_hash(const LevelSpec& level, const Vertex& v) {
  for (int d = 0; d < level.dims; ++d) {
    if (v[d] > static_cast<std::uint32_t>(level.resolution))
      throw std::out_of_range("vertex outside level lattice");
  }
  if (!level.hashed) return static_cast<std::uint32_t>(vertex_linear_index(level, v));
  std::uint32_t h = 0;
  for (int d = 0; d < level.dims; ++d) h ^= v[d] * kPrimes[d];
  return h & (level.table_size - 1);
}

std::uint32_t slot_of_linear(const LevelSpec& level, std::uint64_t linear) {
  if (!level.hashed) return static_cast<std::uint32_t>(linear);
  const std::uint64_t n = level.verts_per_axis();
  std::uint32_t h = static_cast<std::uint32_t>(linear % n);
  linear /= n;
  h ^= static_cast<std::uint32_t>(linear % n) * kPrimes[1];
  if (level.dims == 3) h ^= static_cast<std::uint32_t>(linear / n) * kPrimes[2];
  return h & (level.table_size - 1);
}

InverseHashMap build_inverse_map(const LevelSpec& level) {
  const std::uint64_t verts = level.vertex_count();
  std::vector<std::uint64_t> offsets(static_cast<std::size_t>(level.table_size) + 1, 0);
  std::vector<std::uint32_t> slot_of(verts);
  for (std::uint64_t v = 0; v < verts; ++v) {
    slot_of[v] = slot_of_linear(level, v);
    ++offsets[slot_of[v] + 1];
  }
  for (std::size_t s = 1; s < offsets.size(); ++s) offsets[s] += offsets[s - 1];
  std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
  std::vector<std::uint32_t> vertices(verts);
  for (std::uint64_t v = 0; v < verts; ++v) vertices[cursor[slot_of[v]]++] = static_cast<std::uint32_t>(v);
  return InverseHashMap(std::move(offsets), std::move(vertices));
}

LevelEmbedding LevelEmbedding::zeros(const LevelSpec& spec) {
  LevelEmbedding e;
  e.spec = spec;
  e.latent.assign(spec.theta_count(), 0.0f);
  e.signs.assign(spec.theta_count(), 1);
  return e;
}

void LevelEmbedding::refresh_signs() { binarize(latent, signs); }

void init_latents(LevelEmbedding& level, std::uint64_t seed, float scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-scale, scale);
  for (auto& x : level.latent) x = dist(rng);
  level.refresh_signs();
}

void binarize(std::span<const float> latent, std::span<std::int8_t> signs) {
  if (latent.size() != signs.size()) throw std::invalid_argument("binarize: size mismatch");
  for (std::size_t i = 0; i < latent.size(); ++i) signs[i] = binarize(latent[i]);
}

Corners corners_at(const LevelSpec& level, std::span<const double> pos) {
  Corners c;
  const int dims = level.dims;
  const int res = level.resolution;
  std::array<std::uint32_t, 3> base{};
  std::array<double, 3> frac{};
  for (int d = 0; d < dims; ++d) {
    const double x = std::clamp(pos[d], 0.0, 1.0) * res;
    int cell = static_cast<int>(std::floor(x));
    cell = std::clamp(cell, 0, res - 1);
    base[d] = static_cast<std::uint32_t>(cell);
    frac[d] = x - cell;
  }
  c.count = 1 << dims;
  for (int k = 0; k < c.count; ++k) {
    Vertex v{};
    double w = 1.0;
    for (int d = 0; d < dims; ++d) {
      const bool hi = (k >> d) & 1;
      v[d] = base[d] + (hi ? 1u : 0u);
      w *= hi ? frac[d] : 1.0 - frac[d];
    }
    c.vertex[k] = vertex_linear_index(level, v);
    c.slot[k] = slot_of_linear(level, c.vertex[k]);
    c.weight[k] = w;
  }
  return c;
}

void interpolate(const LevelEmbedding& level, std::span<const double> pos, std::span<float> out) {
  const int f = level.spec.feature_dim;
  if (static_cast<int>(out.size()) != f) throw std::invalid_argument("interpolate: output width mismatch");
  const Corners c = corners_at(level.spec, pos);
  std::array<double, 8> acc{};
  for (int k = 0; k < c.count; ++k) {
    if (c.weight[k] == 0.0) continue;
    const std::int8_t* s = level.signs.data() + static_cast<std::size_t>(c.slot[k]) * f;
    for (int j = 0; j < f; ++j) acc[j] += c.weight[k] * s[j];
  }
  for (int j = 0; j < f; ++j) out[j] = static_cast<float>(acc[j]);
}

std::array<double, 3> vertex_position(const LevelSpec& level, std::uint64_t linear) {
  const Vertex v = vertex_from_linear(level, linear);
  const double inv = 1.0 / level.resolution;
  return {v[0] * inv, v[1] * inv, level.dims == 3 ? v[2] * inv : 0.0};
}

}  // namespace cnc
