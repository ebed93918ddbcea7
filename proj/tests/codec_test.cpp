// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/codec.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cnc/entropy.hpp"
#include "test_models.hpp"

namespace cnc {
namespace {

using testing::small_model;
using testing::SmallModelOptions;

struct Sequence {
  std::vector<int> thetas;
  std::vector<double> probs;
};

Sequence random_sequence(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Sequence s;
  const int mode = static_cast<int>(rng() % 3);
  for (std::size_t i = 0; i < n; ++i) {
    double p = u(rng);
    if (mode == 1) p = std::pow(p, 8.0);         // skewed towards 0
    if (mode == 2) p = 1.0 - std::pow(p, 8.0);   // skewed towards 1
    p = clamp_probability(p);
    s.probs.push_back(p);
    // Mostly follow the prediction, sometimes contradict it.
    const bool plus = (rng() % 10 == 0) ? u(rng) >= p : u(rng) < p;
    s.thetas.push_back(plus ? 1 : -1);
  }
  return s;
}

std::vector<std::uint8_t> encode_sequence(const Sequence& s) {
  RangeEncoder enc;
  for (std::size_t i = 0; i < s.thetas.size(); ++i) enc.encode(s.thetas[i], s.probs[i]);
  return enc.finish();
}

TEST(RangeCoder, RandomSequencesRoundTrip) {
  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 100000; ++trial) {
    const auto s = random_sequence(rng, 1 + rng() % 64);
    const auto bytes = encode_sequence(s);
    RangeDecoder dec(bytes);
    for (std::size_t i = 0; i < s.thetas.size(); ++i) ASSERT_EQ(dec.decode(s.probs[i]), s.thetas[i]) << trial;
  }
}

TEST(RangeCoder, ExtremeProbabilitiesRoundTrip) {
  Sequence s;
  for (int i = 0; i < 5000; ++i) {
    s.probs.push_back(i % 2 ? kProbEps : 1.0 - kProbEps);
    s.thetas.push_back(i % 7 == 0 ? (i % 2 ? 1 : -1) : (i % 2 ? -1 : 1));
  }
  const auto bytes = encode_sequence(s);
  RangeDecoder dec(bytes);
  for (std::size_t i = 0; i < s.thetas.size(); ++i) ASSERT_EQ(dec.decode(s.probs[i]), s.thetas[i]);
}

TEST(RangeCoder, UniformCostsOneBitPerSymbol) {
  std::mt19937_64 rng(1);
  Sequence s;
  for (int i = 0; i < 1000; ++i) {
    s.probs.push_back(0.5);
    s.thetas.push_back(rng() & 1 ? 1 : -1);
  }
  const auto bytes = encode_sequence(s);
  EXPECT_NEAR(static_cast<double>(bytes.size()), 125.0, 8.0);
}

TEST(RangeCoder, ConfidentCorrectIsTiny) {
  Sequence s;
  for (int i = 0; i < 1000; ++i) {
    s.probs.push_back(1.0 - kProbEps);
    s.thetas.push_back(1);
  }
  EXPECT_LT(encode_sequence(s).size(), 10u);
}

TEST(RangeCoder, CodedLengthTracksEstimate) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_sequence(rng, 20000);
    double est = 0.0;
    for (std::size_t i = 0; i < s.thetas.size(); ++i)
      est += bit_estimate(dequantize_probability(quantize_probability(s.probs[i])), s.thetas[i]);
    const double coded = 8.0 * encode_sequence(s).size();
    EXPECT_LE(std::abs(coded - est), 64.0 + s.thetas.size() * 2e-4) << trial;
  }
}

TEST(RangeCoder, TruncatedStream) {
  EXPECT_THROW(RangeDecoder(std::vector<std::uint8_t>{}), StreamError);
  try {
    RangeDecoder dec(std::vector<std::uint8_t>{1, 2});
    FAIL();
  } catch (const StreamError& e) {
    EXPECT_STREQ(e.what(), "truncated payload");
  }
}

TEST(RangeCoder, ProbabilityQuantization) {
  EXPECT_EQ(quantize_probability(0.5), 32768);
  EXPECT_EQ(quantize_probability(kProbEps), 1);
  EXPECT_EQ(quantize_probability(1.0 - kProbEps), 65535);
  EXPECT_EQ(quantize_probability(0.0), 1);
  EXPECT_EQ(quantize_probability(1.0), 65535);
}

TEST(QuantizeMlp, WorkedExample) {
  const std::vector<float> w{-1.0f, 0.0f, 1.0f};
  const auto q = quantize_mlp(w, 13);
  EXPECT_EQ(q.codes, (std::vector<std::uint32_t>{0, 4095, 8191}));
  const auto d = dequantize_mlp(q);
  EXPECT_NEAR(d[1], -1.0 + 4095.0 * 2.0 / 8191.0, 1e-7);
  EXPECT_NEAR(d[1], -0.0001, 0.00003);
  EXPECT_EQ(d[0], -1.0f);
  EXPECT_EQ(d[2], 1.0f);
}

TEST(QuantizeMlp, ErrorBound) {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n(0.0f, 0.4f);
  std::vector<float> w(5000);
  for (auto& x : w) x = n(rng);
  for (int bits : {4, 8, 13, 16}) {
    const auto q = quantize_mlp(w, bits);
    const auto d = dequantize_mlp(q);
    for (std::size_t i = 0; i < w.size(); ++i) {
      EXPECT_LT(q.codes[i], 1u << bits);
      EXPECT_LE(std::abs(d[i] - w[i]), q.step() * (1 + 1e-6) + 1e-7);
      EXPECT_GE(d[i], q.min);
      EXPECT_LE(d[i], q.max);
    }
  }
}

TEST(QuantizeMlp, NearestRoundingHalvesTheBound) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(-2.0f, 3.0f);
  std::vector<float> w(5000);
  for (auto& x : w) x = u(rng);
  const auto fl = quantize_mlp(w, 13);
  const auto nr = quantize_mlp(w, 13, MlpRounding::kNearest);
  EXPECT_EQ(fl.min, nr.min);
  EXPECT_EQ(fl.max, nr.max);
  const auto df = dequantize_mlp(fl), dn = dequantize_mlp(nr);
  double mean_f = 0.0, mean_n = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_LE(std::abs(dn[i] - w[i]), 0.5 * nr.step() * (1 + 1e-4) + 1e-7);
    mean_f += (df[i] - w[i]) / nr.step();
    mean_n += (dn[i] - w[i]) / nr.step();
  }
  // Floor codes sit half a step low on average; nearest codes do not.
  EXPECT_NEAR(mean_f / w.size(), -0.5, 0.03);
  EXPECT_NEAR(mean_n / w.size(), 0.0, 0.03);
  EXPECT_EQ(quantize_mlp(std::vector<float>{-1.0f, 0.0f, 1.0f}, 13, MlpRounding::kNearest).codes[1], 4096u);
  EXPECT_EQ(parse_mlp_rounding("nearest"), MlpRounding::kNearest);
  EXPECT_THROW(parse_mlp_rounding("ceil"), std::invalid_argument);
}

TEST(QuantizeMlp, RejectsBadInput) {
  EXPECT_THROW(quantize_mlp(std::vector<float>{1.0f, NAN}, 13), std::invalid_argument);
  EXPECT_THROW(quantize_mlp(std::vector<float>{1.0f, INFINITY}, 13), std::invalid_argument);
  EXPECT_THROW(quantize_mlp(std::vector<float>{1.0f}, 0), std::invalid_argument);
}

TEST(QuantizeMlp, ConstantParameters) {
  const auto q = quantize_mlp(std::vector<float>{0.3f, 0.3f}, 13);
  EXPECT_TRUE(q.constant());
  EXPECT_EQ(dequantize_mlp(q), (std::vector<float>{0.3f, 0.3f}));
  EXPECT_EQ(read_quantized_mlp(write_quantized_mlp(q)).codes.size(), 2u);
}

TEST(QuantizeMlp, PackedRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-2.0f, 3.0f);
  std::vector<float> w(1001);
  for (auto& x : w) x = u(rng);
  for (int bits : {1, 7, 13, 24}) {
    const auto q = quantize_mlp(w, bits);
    const auto bytes = write_quantized_mlp(q);
    EXPECT_EQ(bytes.size(), 13u + (w.size() * bits + 7) / 8);
    const auto r = read_quantized_mlp(bytes);
    EXPECT_EQ(r.codes, q.codes);
    EXPECT_EQ(r.min, q.min);
    EXPECT_EQ(r.max, q.max);
    EXPECT_THROW(read_quantized_mlp(std::span(bytes).first(bytes.size() - 1)), StreamError);
  }
}

TEST(PackOccupancy, EmptyGridIsTiny) {
  const OccupancyGrid occ(32);
  const auto bytes = pack_occupancy(occ);
  EXPECT_LT(bytes.size(), 16u);
  EXPECT_EQ(unpack_occupancy(bytes), occ);
}

TEST(PackOccupancy, HalfFullGridIsIncompressible) {
  const auto occ = testing::random_occupancy(32, 0.5, 3);
  const auto bytes = pack_occupancy(occ);
  EXPECT_NEAR(static_cast<double>(bytes.size()), 32 * 32 * 32 / 8.0, 32 * 32 * 32 / 8.0 * 0.02);
  EXPECT_EQ(unpack_occupancy(bytes), occ);
}

TEST(PackOccupancy, SphereShellBeatsRawBits) {
  const auto field = synth_field(FieldKind::kSphereShell, 1);
  const auto occ = field_occupancy(field, TrainConfig{});
  const auto bytes = pack_occupancy(occ);
  EXPECT_LT(bytes.size(), occ.serialize().size());
  EXPECT_EQ(unpack_occupancy(bytes), occ);
}

TEST(LevelCoding, EmptyLevelHasEmptyPayload) {
  const auto spec = make_levels(GridConfig{3, 1, 4, 4, 10, 2}).front();
  LevelGeometry g;
  g.spec = spec;
  g.slot_valid.assign(spec.table_size, 0);
  auto e = LevelEmbedding::zeros(spec);
  EXPECT_TRUE(encode_level(e, g, {}).empty());
  EXPECT_NO_THROW(decode_level({}, g, {}, e));
  const std::uint8_t junk[1] = {7};
  EXPECT_THROW(decode_level(junk, g, {}, e), StreamError);
}

void expect_same_signs(const FieldModel& a, const DecodedModel& d) {
  const auto geom = build_field_geometry(a, d.geometry.options);
  ASSERT_EQ(a.levels.size(), d.model.levels.size());
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    const auto& g = geom.levels[l];
    const int f = a.feature_dim();
    for (std::uint32_t s = 0; s < g.spec.table_size; ++s)
      for (int j = 0; j < f; ++j) {
        if (g.valid(s))
          ASSERT_EQ(d.model.levels[l].sign(s, j), a.levels[l].sign(s, j)) << l << " " << s << " " << j;
        else
          ASSERT_EQ(d.model.levels[l].sign(s, j), 1);
      }
  }
}

SmallModelOptions random_options(std::mt19937_64& rng) {
  SmallModelOptions o;
  const int f = 1 << (rng() % 4);
  const int l3 = 1 + static_cast<int>(rng() % 5);
  const int l2 = 1 + static_cast<int>(rng() % 3);
  o.grid3d = {3, l3, 3 + static_cast<int>(rng() % 4), 24, 6 + static_cast<int>(rng() % 6), f};
  o.grid3d.max_res = l3 == 1 ? o.grid3d.min_res : o.grid3d.max_res;
  o.grid2d = {2, l2, 4, 40, 5 + static_cast<int>(rng() % 5), f};
  o.grid2d.max_res = l2 == 1 ? o.grid2d.min_res : o.grid2d.max_res;
  o.context.context_levels = 1 + static_cast<int>(rng() % 3);
  o.context.ablation = static_cast<ContextAblation>(rng() % 5);
  o.context.disable_from_level = (rng() % 3 == 0) ? 2 + static_cast<int>(rng() % 3) : 0;
  o.occupancy_resolution = 4 + static_cast<int>(rng() % 8);
  o.occupancy_fill = 0.05 + 0.3 * (rng() % 100) / 100.0;
  o.plus_bias = (rng() % 3) * 0.3;
  return o;
}

TEST(EncodeModel, RandomConfigsRoundTrip) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto o = random_options(rng);
    const auto m = small_model(100 + trial, o);
    EncodeOptions eo;
    eo.geometry.footprint = (trial % 4 == 3) ? Footprint::kDual : Footprint::kSupport;
    const auto enc = encode_model(m, eo);
    const auto dec = decode_model(enc.bytes);
    expect_same_signs(m, dec);
    EXPECT_EQ(dec.sizes.total, enc.bytes.size());
    EXPECT_EQ(dec.model.occupancy, m.occupancy);
    EXPECT_EQ(dec.model.fusers.size(), m.fusers.size());
    for (const auto& [key, fuser] : m.fusers) EXPECT_EQ(dec.model.fusers.at(key).net, fuser.net);
    EXPECT_EQ(dec.model.context.ablation, m.context.ablation);
    EXPECT_EQ(dec.geometry.options.footprint, eo.geometry.footprint);
  }
}

TEST(EncodeModel, SizesAddUp) {
  const auto m = small_model(3);
  const auto enc = encode_model(m);
  const auto& s = enc.sizes;
  EXPECT_EQ(s.total, enc.bytes.size());
  EXPECT_EQ(s.header + s.occupancy + s.fusers + s.mlp + s.emb3d + s.emb2d, s.total);
  std::size_t levels = 0;
  for (auto b : enc.level_bytes) levels += b;
  EXPECT_EQ(levels, s.emb3d + s.emb2d);
  const auto rep = measure_embedding_payloads(m, build_field_geometry(m));
  EXPECT_EQ(rep.level_bytes, enc.level_bytes);
}

TEST(EncodeModel, DequantizedNetWithinStep) {
  const auto m = small_model(4);
  const auto dec = decode_model(encode_model(m).bytes);
  const auto q = quantize_mlp(m.net.parameters(), kDefaultMlpBits);
  const auto a = m.net.parameters(), b = dec.model.net.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), q.step() * (1 + 1e-6) + 1e-7);
}

TEST(EncodeModel, Deterministic) {
  const auto m = small_model(5);
  EncodeOptions one, three;
  three.threads = 3;
  const auto a = encode_model(m, one).bytes;
  EXPECT_EQ(encode_model(m, one).bytes, a);
  EXPECT_EQ(encode_model(m, three).bytes, a);
  const auto d1 = decode_model(a, 1), d3 = decode_model(a, 3);
  for (std::size_t l = 0; l < d1.model.levels.size(); ++l) EXPECT_EQ(d1.model.levels[l].signs, d3.model.levels[l].signs);
}

std::string decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_model(bytes);
  } catch (const StreamError& e) {
    return e.what();
  }
  return "";
}

TEST(DecodeModel, CorruptionIsDetected) {
  const auto bytes = encode_model(small_model(6)).bytes;
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    auto bad = bytes;
    bad[9 + rng() % (bad.size() - 9)] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    EXPECT_NE(decode_error(bad), "") << trial;
  }
  auto payload_flip = bytes;
  payload_flip.back() ^= 0x40;
  EXPECT_EQ(decode_error(payload_flip), "checksum mismatch");
}

TEST(DecodeModel, TruncationAndFraming) {
  const auto bytes = encode_model(small_model(7)).bytes;
  for (std::size_t n : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1})
    EXPECT_EQ(decode_error(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + n)), "truncated payload") << n;
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_EQ(decode_error(longer), "trailing bytes after payload");
  auto version = bytes;
  version[4] = 99;
  EXPECT_NE(decode_error(version).find("version"), std::string::npos);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_NE(decode_error(magic).find("magic"), std::string::npos);
}

TEST(EncodeModel, FrequencyBaselineRoundTrip) {
  SmallModelOptions o;
  o.context.ablation = ContextAblation::kAll;
  const auto m = small_model(8, o);
  EXPECT_TRUE(m.fusers.empty());
  expect_same_signs(m, decode_model(encode_model(m).bytes));
}

}  // namespace
}  // namespace cnc
