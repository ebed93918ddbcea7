// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/occupancy.hpp"

#include <algorithm>
#include <cmath>

namespace cnc {

namespace {

struct AxisOverlap {
  int cell;
  double length;
};

// Overlaps of [lo, hi] with the unit interval split into `cells` cells.
std::vector<AxisOverlap> axis_overlaps(double lo, double hi, int cells) {
  std::vector<AxisOverlap> out;
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0);
  if (hi <= lo) return out;
  const int first = std::clamp(static_cast<int>(std::floor(lo * cells)), 0, cells - 1);
  const int last = std::clamp(static_cast<int>(std::ceil(hi * cells)) - 1, 0, cells - 1);
  for (int k = first; k <= last; ++k) {
    const double a = std::max(lo, static_cast<double>(k) / cells);
    const double b = std::min(hi, static_cast<double>(k + 1) / cells);
    if (b > a) out.push_back({k, b - a});
  }
  return out;
}

// Per-vertex-coordinate overlap lists along one axis of a level.
std::vector<std::vector<AxisOverlap>> vertex_axis_overlaps(int level_res, int occ_res, Footprint footprint) {
  const double half = (footprint == Footprint::kSupport ? 1.0 : 0.5) / level_res;
  std::vector<std::vector<AxisOverlap>> table(static_cast<std::size_t>(level_res) + 1);
  for (int i = 0; i <= level_res; ++i) {
    const double c = static_cast<double>(i) / level_res;
    table[i] = axis_overlaps(c - half, c + half, occ_res);
  }
  return table;
}

// Occupied-cell counts along the projection axis of a plane, indexed [u + R v].
std::vector<int> column_counts(const OccupancyGrid& occ, Plane plane) {
  const int r = occ.resolution();
  std::vector<int> counts(static_cast<std::size_t>(r) * r, 0);
  for (int z = 0; z < r; ++z)
    for (int y = 0; y < r; ++y)
      for (int x = 0; x < r; ++x) {
        if (!occ.occupied(x, y, z)) continue;
        int u = 0, v = 0;
        switch (plane) {
          case Plane::kXY: u = x, v = y; break;
          case Plane::kXZ: u = x, v = z; break;
          case Plane::kYZ: u = y, v = z; break;
        }
        ++counts[u + static_cast<std::size_t>(r) * v];
      }
  return counts;
}

}  // namespace

OccupancyGrid::OccupancyGrid(int resolution) : res_(resolution) {
  if (resolution < 1 || resolution > 65535) throw std::invalid_argument("occupancy resolution out of range");
  cells_.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0);
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

std::array<int, 3> OccupancyGrid::cell_of(std::span<const double> xyz) const {
  std::array<int, 3> c{};
  for (int d = 0; d < 3; ++d)
    c[d] = std::clamp(static_cast<int>(std::floor(xyz[d] * res_)), 0, res_ - 1);
  return c;
}

std::vector<std::uint8_t> OccupancyGrid::serialize() const {
  std::vector<std::uint8_t> out(2 + (cells_.size() + 7) / 8, 0);
  out[0] = static_cast<std::uint8_t>(res_ & 0xff);
  out[1] = static_cast<std::uint8_t>(res_ >> 8);
  for (std::size_t i = 0; i < cells_.size(); ++i)
    if (cells_[i]) out[2 + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return out;
}

OccupancyGrid OccupancyGrid::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw std::runtime_error("occupancy: truncated payload");
  const int res = bytes[0] | (bytes[1] << 8);
  OccupancyGrid occ(res);
  if (bytes.size() < 2 + (occ.cells_.size() + 7) / 8) throw std::runtime_error("occupancy: truncated payload");
  for (std::size_t i = 0; i < occ.cells_.size(); ++i) occ.cells_[i] = (bytes[2 + i / 8] >> (i % 8)) & 1u;
  return occ;
}

OccupancyGrid derive_occupancy(const std::function<double(double, double, double)>& magnitude, int resolution,
                               double threshold) {
  OccupancyGrid occ(resolution);
  constexpr int kStencil = 2;
  const double inv = 1.0 / resolution;
  for (int z = 0; z < resolution; ++z)
    for (int y = 0; y < resolution; ++y)
      for (int x = 0; x < resolution; ++x) {
        double peak = 0.0;
        for (int sz = 0; sz < kStencil; ++sz)
          for (int sy = 0; sy < kStencil; ++sy)
            for (int sx = 0; sx < kStencil; ++sx) {
              const double px = (x + (sx + 0.5) / kStencil) * inv;
              const double py = (y + (sy + 0.5) / kStencil) * inv;
              const double pz = (z + (sz + 0.5) / kStencil) * inv;
              peak = std::max(peak, std::abs(magnitude(px, py, pz)));
            }
        occ.set(x, y, z, peak > threshold);
      }
  if (occ.occupied_count() == 0) throw DegenerateSceneError("occupancy grid is empty: degenerate scene");
  return occ;
}

double occupied_volume(const OccupancyGrid& occ, const std::array<double, 3>& lo, const std::array<double, 3>& hi) {
  const int r = occ.resolution();
  const auto ox = axis_overlaps(lo[0], hi[0], r);
  const auto oy = axis_overlaps(lo[1], hi[1], r);
  const auto oz = axis_overlaps(lo[2], hi[2], r);
  double volume = 0.0;
  for (const auto& z : oz)
    for (const auto& y : oy)
      for (const auto& x : ox)
        if (occ.occupied(x.cell, y.cell, z.cell)) volume += x.length * y.length * z.length;
  return volume;
}

double aoe(const LevelSpec& level, const Vertex& v, const OccupancyGrid& occ, Footprint footprint) {
  const double half = (footprint == Footprint::kSupport ? 1.0 : 0.5) / level.resolution;
  std::array<double, 3> lo{}, hi{};
  if (level.dims == 3) {
    for (int d = 0; d < 3; ++d) {
      const double c = static_cast<double>(v[d]) / level.resolution;
      lo[d] = c - half;
      hi[d] = c + half;
    }
    return occupied_volume(occ, lo, hi);
  }
  const double cu = static_cast<double>(v[0]) / level.resolution;
  const double cv = static_cast<double>(v[1]) / level.resolution;
  int axis_u = 0, axis_v = 1, axis_w = 2;
  switch (level.plane) {
    case Plane::kXY: axis_u = 0, axis_v = 1, axis_w = 2; break;
    case Plane::kXZ: axis_u = 0, axis_v = 2, axis_w = 1; break;
    case Plane::kYZ: axis_u = 1, axis_v = 2, axis_w = 0; break;
  }
  lo[axis_u] = cu - half, hi[axis_u] = cu + half;
  lo[axis_v] = cv - half, hi[axis_v] = cv + half;
  lo[axis_w] = 0.0, hi[axis_w] = 1.0;
  return occupied_volume(occ, lo, hi);
}

std::vector<float> level_aoe(const LevelSpec& level, const OccupancyGrid& occ, Footprint footprint) {
  const int r = occ.resolution();
  const auto table = vertex_axis_overlaps(level.resolution, r, footprint);
  const std::uint32_t n = level.verts_per_axis();
  std::vector<float> out(level.vertex_count(), 0.0f);
  if (level.dims == 3) {
    std::size_t idx = 0;
    for (std::uint32_t z = 0; z < n; ++z)
      for (std::uint32_t y = 0; y < n; ++y)
        for (std::uint32_t x = 0; x < n; ++x, ++idx) {
          double volume = 0.0;
          for (const auto& oz : table[z])
            for (const auto& oy : table[y])
              for (const auto& ox : table[x])
                if (occ.occupied(ox.cell, oy.cell, oz.cell)) volume += ox.length * oy.length * oz.length;
          out[idx] = static_cast<float>(volume);
        }
    return out;
  }
  const auto counts = column_counts(occ, level.plane);
  const double depth = 1.0 / r;
  std::size_t idx = 0;
  for (std::uint32_t v = 0; v < n; ++v)
    for (std::uint32_t u = 0; u < n; ++u, ++idx) {
      double volume = 0.0;
      for (const auto& ov : table[v])
        for (const auto& ou : table[u]) {
          const int c = counts[ou.cell + static_cast<std::size_t>(r) * ov.cell];
          if (c > 0) volume += ou.length * ov.length * c * depth;
        }
      out[idx] = static_cast<float>(volume);
    }
  return out;
}

std::vector<double> fusion_weights(std::span<const double> aoes) {
  double total = 0.0;
  for (double a : aoes) {
    if (a < 0.0) throw std::invalid_argument("fusion_weights: negative AOE");
    total += a;
  }
  if (!(total > 0.0)) throw InvalidSlotError("fusion_weights: slot has no vertex with positive AOE");
  std::vector<double> w(aoes.size());
  for (std::size_t k = 0; k < aoes.size(); ++k) w[k] = aoes[k] / total;
  return w;
}

void LevelGeometry::slot_weights(std::uint32_t slot, std::vector<std::uint32_t>& vertices,
                                 std::vector<double>& weights) const {
  vertices.clear();
  weights.clear();
  if (!valid(slot)) throw InvalidSlotError("slot_weights: invalid slot");
  double total = 0.0;
  for (std::uint32_t v : inverse.vertices(slot)) {
    const float w = vertex_weight[v];
    if (w > 0.0f) {
      vertices.push_back(v);
      weights.push_back(w);
      total += w;
    }
  }
  for (double& w : weights) w /= total;
}

LevelGeometry build_level_geometry(const LevelSpec& level, const OccupancyGrid& occ, const GeometryOptions& options) {
  LevelGeometry g;
  g.spec = level;
  g.inverse = build_inverse_map(level);
  if (options.rule == ValidityRule::kAreaOfEffect) {
    g.vertex_weight = level_aoe(level, occ, options.footprint);
  } else {
    g.vertex_weight.assign(level.vertex_count(), 0.0f);
    std::vector<int> counts;
    if (level.dims == 2) counts = column_counts(occ, level.plane);
    const int r = occ.resolution();
    for (std::uint64_t lin = 0; lin < g.vertex_weight.size(); ++lin) {
      const auto pos = vertex_position(level, lin);
      bool member = false;
      if (level.dims == 3) {
        const auto c = occ.cell_of(pos);
        member = occ.occupied(c[0], c[1], c[2]);
      } else {
        const int cu = std::clamp(static_cast<int>(std::floor(pos[0] * r)), 0, r - 1);
        const int cv = std::clamp(static_cast<int>(std::floor(pos[1] * r)), 0, r - 1);
        member = counts[cu + static_cast<std::size_t>(r) * cv] > 0;
      }
      g.vertex_weight[lin] = member ? 1.0f : 0.0f;
    }
  }
  g.slot_valid.assign(level.table_size, 0);
  for (std::uint32_t s = 0; s < level.table_size; ++s) {
    for (std::uint32_t v : g.inverse.vertices(s)) {
      if (g.vertex_weight[v] > 0.0f) {
        g.slot_valid[s] = 1;
        break;
      }
    }
    if (g.slot_valid[s]) g.valid_slots.push_back(s);
  }
  return g;
}

SlotValidity validity_masks(std::span<const LevelGeometry> levels) {
  SlotValidity out;
  for (const auto& g : levels) {
    out.masks.push_back(g.slot_valid);
    out.valid_theta += static_cast<std::uint64_t>(g.valid_slots.size()) * g.spec.feature_dim;
    out.total_theta += g.spec.theta_count();
  }
  return out;
}

void Pvf::sample(Plane plane, std::span<const double> uv, std::span<float> out) const {
  const int r = resolution;
  int base[2];
  double frac[2];
  for (int d = 0; d < 2; ++d) {
    const double x = std::clamp(uv[d], 0.0, 1.0) * r;
    base[d] = std::clamp(static_cast<int>(std::floor(x)), 0, r - 1);
    frac[d] = x - base[d];
  }
  std::fill(out.begin(), out.begin() + feature_dim, 0.0f);
  for (int k = 0; k < 4; ++k) {
    const int du = k & 1, dv = (k >> 1) & 1;
    const double w = (du ? frac[0] : 1.0 - frac[0]) * (dv ? frac[1] : 1.0 - frac[1]);
    if (w == 0.0) continue;
    for (int j = 0; j < feature_dim; ++j) out[j] += static_cast<float>(w * at(plane, base[0] + du, base[1] + dv, j));
  }
}

Pvf project_pvf(const LevelEmbedding& finest, std::span<const float> vertex_weight) {
  const LevelSpec& spec = finest.spec;
  if (spec.dims != 3) throw std::invalid_argument("project_pvf: finest level must be 3D");
  if (vertex_weight.size() != spec.vertex_count()) throw std::invalid_argument("project_pvf: weight size mismatch");
  const int f = spec.feature_dim;
  const std::size_t n = spec.verts_per_axis();
  Pvf pvf;
  pvf.resolution = spec.resolution;
  pvf.feature_dim = f;
  std::array<std::vector<std::uint32_t>, 3> plus;
  std::array<std::vector<std::uint32_t>, 3> valid;
  for (int p = 0; p < 3; ++p) {
    plus[p].assign(n * n * f, 0);
    valid[p].assign(n * n, 0);
  }
  std::size_t lin = 0;
  for (std::size_t z = 0; z < n; ++z)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x, ++lin) {
        if (!(vertex_weight[lin] > 0.0f)) continue;
        const std::size_t cells[3] = {x + n * y, x + n * z, y + n * z};
        const std::int8_t* s = finest.signs.data() + static_cast<std::size_t>(slot_of_linear(spec, lin)) * f;
        for (int p = 0; p < 3; ++p) {
          ++valid[p][cells[p]];
          for (int j = 0; j < f; ++j)
            if (s[j] > 0) ++plus[p][cells[p] * f + j];
        }
      }
  for (int p = 0; p < 3; ++p) {
    pvf.planes[p].assign(n * n * f, 0.5f);
    for (std::size_t c = 0; c < n * n; ++c) {
      if (valid[p][c] == 0) continue;
      for (int j = 0; j < f; ++j)
        pvf.planes[p][c * f + j] = static_cast<float>(static_cast<double>(plus[p][c * f + j]) / valid[p][c]);
    }
  }
  return pvf;
}

}  // namespace cnc
