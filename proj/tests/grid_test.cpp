// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

namespace cnc {
namespace {

LevelSpec dense_level(int dims, int res, int f = 1) {
  GridConfig cfg{dims, 1, res, res, 20, f};
  return make_levels(cfg).front();
}

LevelSpec hashed_level(int dims, int res, int log2t, int f = 1) {
  GridConfig cfg{dims, 1, res, res, log2t, f};
  return make_levels(cfg).front();
}

TEST(LevelResolutions, PaperEndpoints) {
  const auto r = level_resolutions({3, 12, 16, 512, 19, 8});
  ASSERT_EQ(r.size(), 12u);
  EXPECT_EQ(r.front(), 16);
  EXPECT_EQ(r.back(), 512);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_LT(r[i - 1], r[i]);
}

TEST(LevelResolutions, SingleLevel) { EXPECT_EQ(level_resolutions({3, 1, 16, 16, 15, 8}), std::vector<int>{16}); }

TEST(LevelResolutions, GrowthFactorTwo) {
  EXPECT_EQ(level_resolutions({2, 4, 128, 1024, 17, 8}), (std::vector<int>{128, 256, 512, 1024}));
}

TEST(LevelResolutions, MatchesClosedForm) {
  const GridConfig cfg{3, 7, 10, 300, 15, 2};
  const auto r = level_resolutions(cfg);
  const double b = std::pow(300.0 / 10.0, 1.0 / 6.0);
  for (int l = 0; l < 7; ++l) EXPECT_EQ(r[l], static_cast<int>(std::lround(10 * std::pow(b, l))));
}

TEST(GridConfig, RejectsBrokenInvariants) {
  EXPECT_THROW((GridConfig{4, 1, 16, 16, 15, 8}.validate()), std::invalid_argument);
  EXPECT_THROW((GridConfig{3, 0, 16, 16, 15, 8}.validate()), std::invalid_argument);
  EXPECT_THROW((GridConfig{3, 2, 32, 16, 15, 8}.validate()), std::invalid_argument);
  EXPECT_THROW((GridConfig{3, 2, 16, 32, 0, 8}.validate()), std::invalid_argument);
  EXPECT_THROW((GridConfig{3, 2, 16, 32, 15, 0}.validate()), std::invalid_argument);
}

TEST(SpatialHash, DenseLevelIsRowMajor) {
  // Resolution 3 has 4 vertices per axis.
  const auto level = dense_level(3, 3);
  ASSERT_FALSE(level.hashed);
  EXPECT_EQ(spatial_hash(level, {1, 2, 3}), 1u + 2u * 4u + 3u * 16u);
  EXPECT_EQ(spatial_hash(level, {1, 2, 3}), 57u);
}

TEST(SpatialHash, OriginHashesToZero) {
  const auto level = hashed_level(3, 64, 10);
  ASSERT_TRUE(level.hashed);
  EXPECT_EQ(spatial_hash(level, {0, 0, 0}), 0u);
}

TEST(SpatialHash, PigeonholeCollision) {
  const auto level = hashed_level(3, 16, 8);
  ASSERT_GT(level.vertex_count(), level.table_size);
  std::set<std::uint32_t> seen;
  bool collided = false;
  for (std::uint64_t i = 0; i < level.vertex_count() && !collided; ++i)
    collided = !seen.insert(spatial_hash(level, vertex_from_linear(level, i))).second;
  EXPECT_TRUE(collided);
}

TEST(SpatialHash, MatchesXorOfPrimes) {
  const auto level = hashed_level(3, 40, 12);
  std::mt19937 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Vertex v{rng() % 41, rng() % 41, rng() % 41};
    const std::uint32_t expect = (v[0] ^ (v[1] * 2654435761u) ^ (v[2] * 805459861u)) % 4096u;
    EXPECT_EQ(spatial_hash(level, v), expect);
    EXPECT_EQ(slot_of_linear(level, vertex_linear_index(level, v)), expect);
  }
}

TEST(SpatialHash, PlanesUseFirstTwoPrimes) {
  const auto level = hashed_level(2, 200, 10);
  ASSERT_TRUE(level.hashed);
  EXPECT_EQ(spatial_hash(level, {7, 9, 0}), (7u ^ (9u * 2654435761u)) % 1024u);
}

TEST(SpatialHash, RejectsOutsideVertex) {
  const auto level = dense_level(3, 3);
  EXPECT_THROW(spatial_hash(level, {4, 0, 0}), std::out_of_range);
}

TEST(InverseHashMap, DenseLevelHasOneVertexPerSlot) {
  const auto level = dense_level(3, 4);
  const auto inv = build_inverse_map(level);
  ASSERT_EQ(inv.slot_count(), 125u);
  for (std::uint32_t s = 0; s < 125; ++s) EXPECT_EQ(inv.collisions(s), 1u);
}

TEST(InverseHashMap, ConservesVertices) {
  const auto level = hashed_level(3, 8, 6);
  const auto inv = build_inverse_map(level);
  std::size_t total = 0;
  for (std::uint32_t s = 0; s < inv.slot_count(); ++s) total += inv.collisions(s);
  EXPECT_EQ(total, 729u);
  EXPECT_EQ(inv.total_vertices(), 729u);
}

TEST(InverseHashMap, RehashRoundTrip) {
  for (int dims : {2, 3}) {
    const auto level = hashed_level(dims, 37, 9);
    const auto inv = build_inverse_map(level);
    for (std::uint32_t s = 0; s < inv.slot_count(); ++s) {
      const auto verts = inv.vertices(s);
      for (std::size_t k = 0; k < verts.size(); ++k) {
        EXPECT_EQ(spatial_hash(level, vertex_from_linear(level, verts[k])), s);
        if (k > 0) EXPECT_LT(verts[k - 1], verts[k]);
      }
    }
  }
}

LevelEmbedding random_signs(const LevelSpec& spec, std::uint64_t seed) {
  auto e = LevelEmbedding::zeros(spec);
  std::mt19937_64 rng(seed);
  for (auto& x : e.latent) x = (rng() & 1) ? 0.5f : -0.5f;
  e.refresh_signs();
  return e;
}

TEST(Interpolate, VertexIdentity) {
  const auto spec = hashed_level(3, 9, 7, 4);
  const auto e = random_signs(spec, 5);
  const Vertex v{3, 7, 2};
  const double pos[3] = {3.0 / 9, 7.0 / 9, 2.0 / 9};
  std::vector<float> out(4);
  interpolate(e, pos, out);
  const auto slot = spatial_hash(spec, v);
  for (int j = 0; j < 4; ++j) EXPECT_FLOAT_EQ(out[j], e.sign(slot, j));
}

TEST(Interpolate, AllOnes) {
  const auto spec = dense_level(3, 5, 4);
  auto e = LevelEmbedding::zeros(spec);
  e.refresh_signs();
  const double pos[3] = {0.31, 0.77, 0.05};
  std::vector<float> out(4);
  interpolate(e, pos, out);
  for (float x : out) EXPECT_FLOAT_EQ(x, 1.0f);
}

TEST(Interpolate, CellCenterIsCornerMean) {
  for (int dims : {2, 3}) {
    const auto spec = hashed_level(dims, 11, 6, 4);
    const auto e = random_signs(spec, 11);
    const double pos[3] = {4.5 / 11, 2.5 / 11, 8.5 / 11};
    std::vector<float> out(4);
    interpolate(e, std::span<const double>(pos, dims), out);
    std::vector<double> mean(4, 0.0);
    const int n = 1 << dims;
    for (int k = 0; k < n; ++k) {
      const Vertex v{4u + (k & 1), 2u + ((k >> 1) & 1), dims == 3 ? 8u + ((k >> 2) & 1) : 0u};
      const auto slot = spatial_hash(spec, v);
      for (int j = 0; j < 4; ++j) mean[j] += e.sign(slot, j) / static_cast<double>(n);
    }
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(out[j], mean[j], 1e-6);
  }
}

TEST(Interpolate, WeightsAreConvex) {
  const auto spec = hashed_level(3, 23, 9, 2);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double pos[3] = {u(rng), u(rng), u(rng)};
    const auto c = corners_at(spec, pos);
    ASSERT_EQ(c.count, 8);
    double sum = 0.0;
    for (int k = 0; k < c.count; ++k) {
      EXPECT_GE(c.weight[k], 0.0);
      sum += c.weight[k];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Binarize, Signs) {
  EXPECT_EQ(binarize(0.3f), 1);
  EXPECT_EQ(binarize(-0.7f), -1);
  EXPECT_EQ(binarize(0.0f), 1);
  EXPECT_EQ(binarize(-0.0f), 1);
  EXPECT_EQ(binarize(25.0f), 1);
  EXPECT_EQ(binarize(-1e-30f), -1);
}

TEST(Binarize, StraightThroughMatchesHardTanhDifference) {
  // The surrogate is hard-tanh; its finite difference gives the expected
  // backward pass.
  auto hard_tanh = [](double x) { return std::clamp(x, -1.0, 1.0); };
  for (float x : {0.5f, -0.3f, 1.5f, -2.0f}) {
    const double h = 1e-4;
    const double fd = (hard_tanh(x + h) - hard_tanh(x - h)) / (2 * h);
    EXPECT_NEAR(binarize_backward(x, 1.0f), fd, 1e-9);
    EXPECT_FLOAT_EQ(binarize_backward(x, 3.0f), static_cast<float>(3.0 * fd));
  }
  EXPECT_FLOAT_EQ(binarize_backward(0.5f, 2.5f), 2.5f);
  EXPECT_FLOAT_EQ(binarize_backward(1.5f, 2.5f), 0.0f);
}

TEST(Binarize, OutputAlwaysPlusMinusOne) {
  const auto spec = dense_level(3, 3, 2);
  auto e = LevelEmbedding::zeros(spec);
  init_latents(e, 9);
  for (float x : e.latent) EXPECT_LE(std::abs(x), 1e-4f);
  e.latent[0] = 1e9f;
  e.latent[1] = -1e9f;
  e.refresh_signs();
  for (auto s : e.signs) EXPECT_TRUE(s == 1 || s == -1);
}

}  // namespace
}  // namespace cnc
