// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "byte_io.hpp"

namespace cnc {

namespace {

constexpr char kMagic[4] = {'C', 'N', 'C', 'K'};
constexpr std::uint8_t kVersion = 1;

void write_grid(ByteWriter& w, const GridConfig& g) {
  w.u8(static_cast<std::uint8_t>(g.num_levels));
  w.u16(static_cast<std::uint16_t>(g.min_res));
  w.u16(static_cast<std::uint16_t>(g.max_res));
  w.u8(static_cast<std::uint8_t>(g.table_size_log2));
}

GridConfig read_grid(ByteReader& r, int dims, int f) {
  GridConfig g;
  g.dims = dims;
  g.num_levels = r.u8();
  g.min_res = r.u16();
  g.max_res = r.u16();
  g.table_size_log2 = r.u8();
  g.feature_dim = f;
  return g;
}

void write_floats(ByteWriter& w, std::span<const float> v) {
  for (float x : v) w.f32(x);
}

void read_floats(ByteReader& r, std::span<float> v) {
  for (float& x : v) x = r.f32();
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  const FieldModel& m = ckpt.model;
  ByteWriter w;
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
  w.u8(kVersion);
  w.str(ckpt.config_text);
  w.u8(static_cast<std::uint8_t>(m.context.ablation));
  w.u8(static_cast<std::uint8_t>(ckpt.geometry.rule));
  w.u8(static_cast<std::uint8_t>(ckpt.geometry.footprint));
  w.u8(static_cast<std::uint8_t>(m.feature_dim()));
  w.u8(static_cast<std::uint8_t>(m.context.context_levels));
  w.u8(static_cast<std::uint8_t>(m.context.disable_from_level));
  write_grid(w, m.grid3d);
  write_grid(w, m.grid2d);
  const NetShape shape = m.net_shape();
  w.u8(static_cast<std::uint8_t>(shape.hidden_layers));
  w.u16(static_cast<std::uint16_t>(shape.hidden_width));
  w.u8(static_cast<std::uint8_t>(shape.channels));
  const auto occ = m.occupancy.serialize();
  w.u32(static_cast<std::uint32_t>(occ.size()));
  w.bytes(occ);
  for (const auto& level : m.levels) write_floats(w, level.latent);
  w.u32(static_cast<std::uint32_t>(m.fusers.size()));
  for (const auto& [key, fuser] : m.fusers) {
    w.u8(static_cast<std::uint8_t>(key.kind));
    w.u8(static_cast<std::uint8_t>(key.context_levels));
    w.u8(key.uses_pvf ? 1 : 0);
    write_floats(w, fuser.net.parameters());
  }
  write_floats(w, m.net.parameters());
  return std::move(w.buffer());
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw StreamError("bad magic: not a checkpoint file");
  if (bytes[4] != kVersion) throw StreamError("unsupported checkpoint version " + std::to_string(bytes[4]));
  ByteReader r(bytes.subspan(5));
  Checkpoint ckpt;
  ckpt.config_text = r.str();
  FieldModel& m = ckpt.model;
  const std::uint8_t ablation = r.u8();
  if (ablation > static_cast<std::uint8_t>(ContextAblation::kAll)) throw StreamError("checkpoint: bad ablation");
  m.context.ablation = static_cast<ContextAblation>(ablation);
  ckpt.geometry.rule = r.u8() ? ValidityRule::kCellMembership : ValidityRule::kAreaOfEffect;
  ckpt.geometry.footprint = r.u8() ? Footprint::kDual : Footprint::kSupport;
  const int f = r.u8();
  m.context.context_levels = r.u8();
  m.context.disable_from_level = r.u8();
  m.grid3d = read_grid(r, 3, f);
  m.grid2d = read_grid(r, 2, f);
  NetShape shape;
  shape.hidden_layers = r.u8();
  shape.hidden_width = r.u16();
  shape.channels = r.u8();
  m.occupancy = OccupancyGrid::deserialize(r.bytes(r.u32()));
  std::vector<LevelSpec> specs;
  try {
    specs = model_level_specs(m.grid3d, m.grid2d);
  } catch (const std::invalid_argument& e) {
    throw StreamError(std::string("checkpoint: ") + e.what());
  }
  for (const auto& spec : specs) {
    LevelEmbedding e = LevelEmbedding::zeros(spec);
    read_floats(r, e.latent);
    e.refresh_signs();
    m.levels.push_back(std::move(e));
  }
  const std::uint32_t n_fusers = r.u32();
  for (std::uint32_t i = 0; i < n_fusers; ++i) {
    FuserKey key;
    const std::uint8_t kind = r.u8();
    if (kind > 1) throw StreamError("checkpoint: bad fuser kind");
    key.kind = static_cast<FuserKind>(kind);
    key.context_levels = r.u8();
    key.uses_pvf = r.u8() != 0;
    ContextFuser fuser(key, f);
    read_floats(r, fuser.net.mutable_parameters());
    m.fusers.emplace(key, std::move(fuser));
  }
  m.net = make_reconstruction_net(m.reconstruction_width(), shape);
  read_floats(r, m.net.mutable_parameters());
  if (!r.done()) throw StreamError("checkpoint: trailing bytes");
  return ckpt;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace cnc
