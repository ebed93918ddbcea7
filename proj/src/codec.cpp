// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <optional>

#include "byte_io.hpp"
#include "cnc/entropy.hpp"

namespace cnc {

namespace {

constexpr char kMagic[4] = {'C', 'N', 'C', '1'};
constexpr std::size_t kPreambleSize = 9;  // magic, version, crc32

void write_grid(ByteWriter& w, const GridConfig& g) {
  w.u8(static_cast<std::uint8_t>(g.num_levels));
  w.u16(static_cast<std::uint16_t>(g.min_res));
  w.u16(static_cast<std::uint16_t>(g.max_res));
  w.u8(static_cast<std::uint8_t>(g.table_size_log2));
}

GridConfig read_grid(ByteReader& r, int dims, int feature_dim) {
  GridConfig g;
  g.dims = dims;
  g.num_levels = r.u8();
  g.min_res = r.u16();
  g.max_res = r.u16();
  g.table_size_log2 = r.u8();
  g.feature_dim = feature_dim;
  return g;
}

std::uint8_t pack_flags(const ContextOptions& c, const GeometryOptions& g) {
  std::uint8_t flags = static_cast<std::uint8_t>(c.ablation) & 0x7;
  if (g.rule == ValidityRule::kCellMembership) flags |= 0x8;
  if (g.footprint == Footprint::kDual) flags |= 0x10;
  return flags;
}

// Level view with invalid slots forced to +1: exactly what the decoder holds.
std::vector<LevelEmbedding> filled_levels(const FieldModel& model, const FieldGeometry& geometry) {
  std::vector<LevelEmbedding> out = model.levels;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int f = out[i].spec.feature_dim;
    for (std::uint32_t s = 0; s < out[i].spec.table_size; ++s) {
      if (geometry.levels[i].valid(s)) continue;
      for (int j = 0; j < f; ++j) {
        out[i].signs[static_cast<std::size_t>(s) * f + j] = 1;
        out[i].latent[static_cast<std::size_t>(s) * f + j] = 1.0f;
      }
    }
  }
  return out;
}

bool any_level_uses_pvf(const FieldModel& model) {
  for (const auto& level : model.levels)
    if (level.spec.dims == 2 && plan_level(level.spec, model.context).key.uses_pvf &&
        plan_level(level.spec, model.context).use_fuser)
      return true;
  return false;
}

}  // namespace

const char* mlp_rounding_name(MlpRounding r) { return r == MlpRounding::kFloor ? "floor" : "nearest"; }

MlpRounding parse_mlp_rounding(const std::string& name) {
  if (name == "floor") return MlpRounding::kFloor;
  if (name == "nearest") return MlpRounding::kNearest;
  throw std::invalid_argument("expected floor or nearest, got '" + name + "'");
}

QuantizedMlp quantize_mlp(std::span<const float> params, int bits, MlpRounding rounding) {
  if (bits < 1 || bits > 24) throw std::invalid_argument("quantize_mlp: bits must be in [1, 24]");
  QuantizedMlp q;
  q.bits = bits;
  if (params.empty()) return q;
  for (float w : params)
    if (!std::isfinite(w)) throw std::invalid_argument("quantize_mlp: non-finite parameter");
  const auto [lo, hi] = std::minmax_element(params.begin(), params.end());
  q.min = *lo;
  q.max = *hi;
  const std::uint32_t top = (1u << bits) - 1u;
  q.codes.resize(params.size(), 0);
  if (q.constant()) return q;
  const double scale = top / (static_cast<double>(q.max) - q.min);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double x = (static_cast<double>(params[i]) - q.min) * scale;
    const double c = rounding == MlpRounding::kFloor ? std::floor(x) : std::round(x);
    q.codes[i] = static_cast<std::uint32_t>(std::clamp(c, 0.0, static_cast<double>(top)));
  }
  return q;
}

std::vector<float> dequantize_mlp(const QuantizedMlp& q) {
  std::vector<float> out(q.codes.size(), q.min);
  if (q.constant()) return out;
  const double step = (static_cast<double>(q.max) - q.min) / ((1u << q.bits) - 1u);
  for (std::size_t i = 0; i < q.codes.size(); ++i) out[i] = static_cast<float>(q.min + q.codes[i] * step);
  return out;
}

std::vector<std::uint8_t> write_quantized_mlp(const QuantizedMlp& q) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(q.bits));
  w.f32(q.min);
  w.f32(q.max);
  w.u32(static_cast<std::uint32_t>(q.codes.size()));
  if (q.constant()) return std::move(w.buffer());
  std::uint64_t acc = 0;
  int filled = 0;
  for (std::uint32_t c : q.codes) {
    acc |= static_cast<std::uint64_t>(c) << filled;
    filled += q.bits;
    while (filled >= 8) {
      w.u8(static_cast<std::uint8_t>(acc));
      acc >>= 8;
      filled -= 8;
    }
  }
  if (filled > 0) w.u8(static_cast<std::uint8_t>(acc));
  return std::move(w.buffer());
}

QuantizedMlp read_quantized_mlp(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  QuantizedMlp q;
  q.bits = r.u8();
  if (q.bits < 1 || q.bits > 24) throw StreamError("quantized MLP: bad bit depth");
  q.min = r.f32();
  q.max = r.f32();
  const std::uint32_t n = r.u32();
  q.codes.assign(n, 0);
  if (q.constant()) return q;
  const std::size_t nbytes = (static_cast<std::uint64_t>(n) * q.bits + 7) / 8;
  const auto packed = r.bytes(nbytes);
  std::uint64_t acc = 0;
  int filled = 0;
  std::size_t pos = 0;
  const std::uint32_t mask = (1u << q.bits) - 1u;
  for (std::uint32_t i = 0; i < n; ++i) {
    while (filled < q.bits) {
      acc |= static_cast<std::uint64_t>(packed[pos++]) << filled;
      filled += 8;
    }
    q.codes[i] = static_cast<std::uint32_t>(acc) & mask;
    acc >>= q.bits;
    filled -= q.bits;
  }
  return q;
}

std::vector<std::uint8_t> pack_occupancy(const OccupancyGrid& occ) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(occ.resolution()));
  const double fraction = occ.cell_count() ? static_cast<double>(occ.occupied_count()) / occ.cell_count() : 0.0;
  const std::uint16_t q = quantize_probability(fraction);
  w.u16(q);
  RangeEncoder enc;
  for (std::uint8_t c : occ.cells()) enc.encode(c ? 1 : -1, q);
  w.bytes(enc.finish());
  return std::move(w.buffer());
}

OccupancyGrid unpack_occupancy(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const int res = r.u16();
  const std::uint16_t q = r.u16();
  if (res < 1 || q == 0) throw StreamError("occupancy: bad header");
  OccupancyGrid occ(res);
  RangeDecoder dec(bytes.subspan(r.position()));
  for (int z = 0; z < res; ++z)
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) occ.set(x, y, z, dec.decode(q) > 0);
  return occ;
}

std::vector<std::uint8_t> encode_level(const LevelEmbedding& level, const LevelGeometry& geometry,
                                       std::span<const double> probs) {
  const int f = level.spec.feature_dim;
  if (probs.size() != geometry.valid_slots.size() * f) throw std::invalid_argument("encode_level: probability count");
  if (geometry.valid_slots.empty()) return {};
  RangeEncoder enc;
  std::size_t k = 0;
  for (std::uint32_t s : geometry.valid_slots)
    for (int j = 0; j < f; ++j, ++k) enc.encode(static_cast<int>(level.sign(s, j)), quantize_probability(probs[k]));
  return enc.finish();
}

void decode_level(std::span<const std::uint8_t> payload, const LevelGeometry& geometry, std::span<const double> probs,
                  LevelEmbedding& level) {
  const int f = level.spec.feature_dim;
  if (probs.size() != geometry.valid_slots.size() * f) throw std::invalid_argument("decode_level: probability count");
  if (geometry.valid_slots.empty()) {
    if (!payload.empty()) throw StreamError("non-empty payload for empty level");
    return;
  }
  RangeDecoder dec(payload);
  std::size_t k = 0;
  for (std::uint32_t s : geometry.valid_slots)
    for (int j = 0; j < f; ++j, ++k) {
      const int theta = dec.decode(quantize_probability(probs[k]));
      const std::size_t idx = static_cast<std::size_t>(s) * f + j;
      level.signs[idx] = static_cast<std::int8_t>(theta);
      level.latent[idx] = static_cast<float>(theta);
    }
}

namespace {

struct LevelPass {
  std::vector<std::vector<std::uint8_t>> payloads;
  std::vector<std::uint16_t> freq;
  std::vector<std::uint64_t> symbols;
  std::vector<double> estimated_bits;
};

// Runs the causal per-level coding over `view` (already +1-filled).
LevelPass code_levels(const FieldModel& model, const std::vector<LevelEmbedding>& view,
                      const FieldGeometry& geometry, int threads) {
  FieldModel shadow;
  shadow.grid3d = model.grid3d;
  shadow.grid2d = model.grid2d;
  shadow.context = model.context;
  shadow.levels = view;
  shadow.fusers = model.fusers;
  LevelPass pass;
  const std::size_t n = view.size();
  pass.payloads.resize(n);
  pass.freq.resize(n, 0);
  pass.symbols.resize(n, 0);
  pass.estimated_bits.resize(n, 0.0);
  std::optional<Pvf> pvf;
  for (std::size_t i = 0; i < n; ++i) {
    if (view[i].spec.dims == 2 && !pvf && any_level_uses_pvf(model))
      pvf = project_pvf(view[model.finest_3d()], geometry.levels[model.finest_3d()].vertex_weight);
    const auto f = frequency(view[i], geometry.levels[i]);
    if (!f) continue;
    pass.freq[i] = quantize_frequency(*f);
    const ContextInputs in =
        context_inputs(shadow, geometry, i, dequantize_frequency(pass.freq[i]), pvf ? &*pvf : nullptr);
    const auto probs = level_slot_probabilities(in, threads);
    pass.payloads[i] = encode_level(view[i], geometry.levels[i], probs);
    const int fd = view[i].spec.feature_dim;
    std::vector<double> bits(probs.size());
    std::size_t k = 0;
    for (std::uint32_t s : geometry.levels[i].valid_slots)
      for (int j = 0; j < fd; ++j, ++k) bits[k] = bit_estimate(probs[k], view[i].sign(s, j));
    pass.estimated_bits[i] = pairwise_sum(bits);
    pass.symbols[i] = probs.size();
  }
  return pass;
}

}  // namespace

LevelCodingReport measure_embedding_payloads(const FieldModel& model, const FieldGeometry& geometry, int threads) {
  const auto view = filled_levels(model, geometry);
  const LevelPass pass = code_levels(model, view, geometry, threads);
  LevelCodingReport r;
  for (std::size_t i = 0; i < view.size(); ++i) {
    r.level_bytes.push_back(pass.payloads[i].size());
    r.level_estimated_bits.push_back(pass.estimated_bits[i]);
    (view[i].spec.dims == 3 ? r.emb3d_bytes : r.emb2d_bytes) += pass.payloads[i].size();
  }
  return r;
}

EncodeResult encode_model(const FieldModel& model, const EncodeOptions& options) {
  const FieldGeometry geometry = build_field_geometry(model, options.geometry, options.threads);
  const auto view = filled_levels(model, geometry);
  const LevelPass pass = code_levels(model, view, geometry, options.threads);

  const auto occ_bytes = pack_occupancy(model.occupancy);
  ByteWriter fusers;
  for (const auto& [key, fuser] : model.fusers)
    for (float p : fuser.net.parameters()) fusers.f32(p);
  const auto mlp_bytes = write_quantized_mlp(quantize_mlp(model.net.parameters(), options.mlp_bits, options.mlp_rounding));

  const NetShape shape = model.net_shape();
  ByteWriter h;
  h.u8(pack_flags(model.context, options.geometry));
  h.u8(static_cast<std::uint8_t>(model.feature_dim()));
  h.u8(static_cast<std::uint8_t>(model.context.context_levels));
  h.u8(static_cast<std::uint8_t>(model.context.disable_from_level));
  h.u8(static_cast<std::uint8_t>(options.mlp_bits));
  h.f32(static_cast<float>(options.lambda));
  write_grid(h, model.grid3d);
  write_grid(h, model.grid2d);
  h.u8(static_cast<std::uint8_t>(shape.hidden_layers));
  h.u16(static_cast<std::uint16_t>(shape.hidden_width));
  h.u8(static_cast<std::uint8_t>(shape.channels));
  h.u16(static_cast<std::uint16_t>(model.occupancy.resolution()));
  for (std::size_t i = 0; i < view.size(); ++i) {
    h.u16(pass.freq[i]);
    h.u32(static_cast<std::uint32_t>(geometry.levels[i].valid_slots.size()));
  }
  h.u32(static_cast<std::uint32_t>(occ_bytes.size()));
  h.u32(static_cast<std::uint32_t>(fusers.buffer().size()));
  h.u32(static_cast<std::uint32_t>(mlp_bytes.size()));
  for (const auto& p : pass.payloads) h.u32(static_cast<std::uint32_t>(p.size()));

  ByteWriter body;
  body.bytes(h.buffer());
  body.bytes(occ_bytes);
  body.bytes(fusers.buffer());
  body.bytes(mlp_bytes);
  for (const auto& p : pass.payloads) body.bytes(p);

  EncodeResult result;
  ByteWriter out;
  out.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
  out.u8(kBitstreamVersion);
  const auto& b = body.buffer();
  out.u32(static_cast<std::uint32_t>(crc32(0L, b.data(), static_cast<uInt>(b.size()))));
  out.bytes(b);
  result.bytes = std::move(out.buffer());

  ComponentSizes& s = result.sizes;
  s.header = kPreambleSize + h.buffer().size();
  s.occupancy = occ_bytes.size();
  s.fusers = fusers.buffer().size();
  s.mlp = mlp_bytes.size();
  for (std::size_t i = 0; i < view.size(); ++i) {
    (view[i].spec.dims == 3 ? s.emb3d : s.emb2d) += pass.payloads[i].size();
    result.level_bytes.push_back(pass.payloads[i].size());
    result.level_symbols.push_back(pass.symbols[i]);
    result.estimated_bits += pass.estimated_bits[i];
  }
  s.total = result.bytes.size();

  if (options.verify) {
    const DecodedModel decoded = decode_model(result.bytes, options.threads);
    for (std::size_t i = 0; i < view.size(); ++i) {
      if (decoded.model.levels[i].signs != view[i].signs)
        throw std::runtime_error("encoder/decoder disagreement on level " + std::to_string(i + 1));
    }
  }
  return result;
}

DecodedModel decode_model(std::span<const std::uint8_t> bytes, int threads) {
  if (bytes.size() < kPreambleSize) throw StreamError("truncated payload");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw StreamError("bad magic: not a .cnc bitstream");
  if (bytes[4] != kBitstreamVersion)
    throw StreamError("unsupported bitstream version " + std::to_string(bytes[4]));
  ByteReader pre(bytes.subspan(5, 4));
  const std::uint32_t crc = pre.u32();
  const auto body = bytes.subspan(kPreambleSize);

  ByteReader r(body);
  const std::uint8_t flags = r.u8();
  DecodedModel out;
  FieldModel& m = out.model;
  const int f = r.u8();
  m.context.context_levels = r.u8();
  m.context.disable_from_level = r.u8();
  if ((flags & 0x7) > static_cast<int>(ContextAblation::kAll)) throw StreamError("bad header: ablation flags");
  m.context.ablation = static_cast<ContextAblation>(flags & 0x7);
  out.geometry.options.rule = (flags & 0x8) ? ValidityRule::kCellMembership : ValidityRule::kAreaOfEffect;
  out.geometry.options.footprint = (flags & 0x10) ? Footprint::kDual : Footprint::kSupport;
  out.mlp_bits = r.u8();
  out.lambda = r.f32();
  m.grid3d = read_grid(r, 3, f);
  m.grid2d = read_grid(r, 2, f);
  NetShape shape;
  shape.hidden_layers = r.u8();
  shape.hidden_width = r.u16();
  shape.channels = r.u8();
  const int occ_res = r.u16();

  std::vector<LevelSpec> specs;
  try {
    specs = model_level_specs(m.grid3d, m.grid2d);
  } catch (const std::invalid_argument& e) {
    throw StreamError(std::string("bad header: ") + e.what());
  }
  const std::size_t n = specs.size();
  std::vector<std::uint16_t> freq(n);
  std::vector<std::uint32_t> valid_counts(n);
  for (std::size_t i = 0; i < n; ++i) {
    freq[i] = r.u16();
    valid_counts[i] = r.u32();
  }
  const std::uint32_t occ_len = r.u32();
  const std::uint32_t fuser_len = r.u32();
  const std::uint32_t mlp_len = r.u32();
  std::vector<std::uint32_t> level_len(n);
  std::uint64_t payload_total = static_cast<std::uint64_t>(occ_len) + fuser_len + mlp_len;
  for (auto& len : level_len) {
    len = r.u32();
    payload_total += len;
  }
  const std::size_t header_len = r.position();
  if (header_len + payload_total > body.size()) throw StreamError("truncated payload");
  if (header_len + payload_total < body.size()) throw StreamError("trailing bytes after payload");
  if (crc32(0L, body.data(), static_cast<uInt>(body.size())) != crc) throw StreamError("checksum mismatch");

  m.occupancy = unpack_occupancy(r.bytes(occ_len));
  if (m.occupancy.resolution() != occ_res) throw StreamError("bad header: occupancy resolution");

  ByteReader fr(r.bytes(fuser_len));
  m.fusers = make_fuser_bank(specs, m.context, f, 0);
  for (auto& [key, fuser] : m.fusers) {
    auto params = fuser.net.mutable_parameters();
    for (float& p : params) p = fr.f32();
  }
  if (fr.position() != fuser_len) throw StreamError("bad header: fuser section length");

  for (const auto& spec : specs) {
    LevelEmbedding e = LevelEmbedding::zeros(spec);
    std::fill(e.latent.begin(), e.latent.end(), 1.0f);
    m.levels.push_back(std::move(e));
  }
  m.net = make_reconstruction_net(m.reconstruction_width(), shape);
  const QuantizedMlp q = read_quantized_mlp(r.bytes(mlp_len));
  if (q.codes.size() != m.net.parameter_count()) throw StreamError("bad header: MLP parameter count");
  const auto weights = dequantize_mlp(q);
  std::copy(weights.begin(), weights.end(), m.net.mutable_parameters().begin());

  const GeometryOptions geometry_options = out.geometry.options;
  out.geometry = build_field_geometry(m, geometry_options, threads);
  for (std::size_t i = 0; i < n; ++i)
    if (out.geometry.levels[i].valid_slots.size() != valid_counts[i])
      throw StreamError("valid-slot count disagrees with occupancy geometry");

  std::optional<Pvf> pvf;
  for (std::size_t i = 0; i < n; ++i) {
    const auto payload = r.bytes(level_len[i]);
    if (m.levels[i].spec.dims == 2 && !pvf && any_level_uses_pvf(m))
      pvf = project_pvf(m.levels[m.finest_3d()], out.geometry.levels[m.finest_3d()].vertex_weight);
    if (valid_counts[i] == 0) {
      if (!payload.empty()) throw StreamError("non-empty payload for empty level");
      continue;
    }
    const ContextInputs in =
        context_inputs(m, out.geometry, i, dequantize_frequency(freq[i]), pvf ? &*pvf : nullptr);
    const auto probs = level_slot_probabilities(in, threads);
    decode_level(payload, out.geometry.levels[i], probs, m.levels[i]);
  }

  ComponentSizes& s = out.sizes;
  s.header = kPreambleSize + header_len;
  s.occupancy = occ_len;
  s.fusers = fuser_len;
  s.mlp = mlp_len;
  for (std::size_t i = 0; i < n; ++i) (specs[i].dims == 3 ? s.emb3d : s.emb2d) += level_len[i];
  s.total = bytes.size();
  return out;
}

}  // namespace cnc
