// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnc/model.hpp"
#include "cnc/range_coder.hpp"

namespace cnc {

inline constexpr std::uint8_t kBitstreamVersion = 1;
inline constexpr int kDefaultMlpBits = 13;

// Reconstruction-net parameters as D-bit codes over [min, max]:
// code = floor((w - min) * (2^D - 1) / (max - min)), clamped to 2^D - 1.
struct QuantizedMlp {
  float min = 0.0f;
  float max = 0.0f;
  int bits = kDefaultMlpBits;
  std::vector<std::uint32_t> codes;

  bool constant() const { return !(max > min); }
  // Upper bound on |dequantized - original| per parameter.
  double step() const { return constant() ? 0.0 : (static_cast<double>(max) - min) / ((1u << bits) - 1u); }
};

// kFloor applies the formula above. kNearest rounds to the closest code
// instead; both decode the same way, so the choice is encoder-side only.
enum class MlpRounding : std::uint8_t { kFloor, kNearest };

const char* mlp_rounding_name(MlpRounding r);
// Throws std::invalid_argument for names other than floor and nearest.
MlpRounding parse_mlp_rounding(const std::string& name);

// Throws std::invalid_argument on non-finite parameters or D outside [1, 24].
QuantizedMlp quantize_mlp(std::span<const float> params, int bits, MlpRounding rounding = MlpRounding::kFloor);
std::vector<float> dequantize_mlp(const QuantizedMlp& q);

std::vector<std::uint8_t> write_quantized_mlp(const QuantizedMlp& q);
QuantizedMlp read_quantized_mlp(std::span<const std::uint8_t> bytes);

// u16 resolution, u16 P(occupied) in 16-bit fixed point, then the cells
// (x fastest) range coded with that static probability.
std::vector<std::uint8_t> pack_occupancy(const OccupancyGrid& occ);
OccupancyGrid unpack_occupancy(std::span<const std::uint8_t> bytes);

struct ComponentSizes {
  std::size_t header = 0;
  std::size_t occupancy = 0;
  std::size_t fusers = 0;
  std::size_t mlp = 0;
  std::size_t emb3d = 0;
  std::size_t emb2d = 0;
  std::size_t total = 0;
};

struct EncodeOptions {
  int mlp_bits = kDefaultMlpBits;
  MlpRounding mlp_rounding = MlpRounding::kFloor;
  double lambda = 0.0;  // recorded in the header only
  int threads = 1;
  bool verify = true;  // decode the result and compare every sign
  GeometryOptions geometry;
};

struct EncodeResult {
  std::vector<std::uint8_t> bytes;
  ComponentSizes sizes;
  std::vector<std::size_t> level_bytes;      // payload bytes per flat level
  std::vector<std::uint64_t> level_symbols;  // coded thetas per flat level
  double estimated_bits = 0.0;               // sum of bit estimates over coded thetas
};

// Raised for malformed streams: bad magic, version mismatch, checksum
// failure, truncated payloads, header/geometry disagreement.
using BitstreamError = StreamError;

EncodeResult encode_model(const FieldModel& model, const EncodeOptions& options = {});

struct DecodedModel {
  FieldModel model;  // latents hold the decoded signs as +-1; invalid slots +1
  FieldGeometry geometry;
  double lambda = 0.0;
  int mlp_bits = kDefaultMlpBits;
  ComponentSizes sizes;
};

DecodedModel decode_model(std::span<const std::uint8_t> bytes, int threads = 1);

// Codes a level's valid thetas (valid slots ascending, F per slot) with the
// given probabilities (valid_slots x F). Returns the payload.
std::vector<std::uint8_t> encode_level(const LevelEmbedding& level, const LevelGeometry& geometry,
                                       std::span<const double> probs);
// Inverse of encode_level; writes signs and latents of valid slots.
void decode_level(std::span<const std::uint8_t> payload, const LevelGeometry& geometry, std::span<const double> probs,
                  LevelEmbedding& level);

// Payload of every level of `model` under its context options, as the
// encoder would produce them, without assembling a bitstream. Used for
// ablations that swap context models on fixed signs.
struct LevelCodingReport {
  std::vector<std::size_t> level_bytes;
  std::vector<double> level_estimated_bits;
  std::size_t emb3d_bytes = 0;
  std::size_t emb2d_bytes = 0;
};
LevelCodingReport measure_embedding_payloads(const FieldModel& model, const FieldGeometry& geometry, int threads = 1);

}  // namespace cnc
