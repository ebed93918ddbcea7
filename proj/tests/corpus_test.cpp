// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/corpus.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "cnc/entropy.hpp"
#include "cnc/range_coder.hpp"

namespace cnc {
namespace {

std::vector<std::int8_t> all_thetas(const Corpus& c) {
  std::vector<std::int8_t> out;
  for (const auto& l : c.levels) out.insert(out.end(), l.thetas.begin(), l.thetas.end());
  return out;
}

void expect_agreement(const CorpusCoding& coding, const Corpus& corpus) {
  const auto thetas = all_thetas(corpus);
  ASSERT_EQ(coding.probs.size(), thetas.size());
  double est = 0.0;
  for (std::size_t i = 0; i < thetas.size(); ++i) est += bit_estimate(coding.probs[i], thetas[i]);
  EXPECT_NEAR(coding.estimated_bits, est, 1e-6 * est + 1e-9);
  const double gap = std::abs(static_cast<double>(coding.coded_bits()) - est);
  EXPECT_LE(gap, 64.0 + thetas.size() * 2e-4) << corpus.kind;
  EXPECT_EQ(decode_corpus_payload(coding.payload, coding.probs), thetas);
}

TEST(Corpus, KindsAndNames) {
  EXPECT_EQ(make_corpus("iid(0.5)", 1, 1000).kind, "iid(0.5)");
  EXPECT_EQ(make_corpus("iid", 1, 1000).kind, "iid(0.5)");
  EXPECT_EQ(make_corpus("iid(0.25)", 1, 1000).kind, "iid(0.25)");
  EXPECT_EQ(make_corpus("all-ones", 1, 1000).bit_count(), 1000u);
  const auto ms = make_corpus("multiscale-correlated", 1);
  EXPECT_EQ(ms.levels.size(), 5u);
  EXPECT_EQ(ms.feature_dim, 2);
  EXPECT_EQ(ms.levels.front().resolution, 3);
  EXPECT_EQ(ms.levels.back().resolution, 63);
  EXPECT_EQ(ms.levels.back().thetas.size(), 64u * 64 * 64 * 2);
  EXPECT_THROW(make_corpus("gaussian", 1), std::invalid_argument);
  EXPECT_THROW(make_corpus("iid(1.5)", 1), std::invalid_argument);
  EXPECT_THROW(make_corpus("iid(0.5", 1), std::invalid_argument);
}

TEST(Corpus, Deterministic) {
  EXPECT_EQ(make_corpus("multiscale-correlated", 4), make_corpus("multiscale-correlated", 4));
  EXPECT_NE(make_corpus("iid(0.5)", 4, 5000), make_corpus("iid(0.5)", 5, 5000));
}

TEST(Corpus, FileRoundTrip) {
  for (const char* kind : {"iid(0.3)", "all-ones", "multiscale-correlated"}) {
    const auto c = make_corpus(kind, 2, 4321);
    const auto bytes = write_corpus(c);
    EXPECT_EQ(read_corpus(bytes), c);
    EXPECT_THROW(read_corpus(std::span(bytes).first(bytes.size() - 1)), StreamError);
  }
}

TEST(CorpusCoding, IidHalfIsIncompressible) {
  const auto c = make_corpus("iid(0.5)", 1, 1000000);
  const auto coding = code_corpus_frequency(c);
  EXPECT_NEAR(static_cast<double>(coding.payload.size()), 125000.0, 125.0);
  expect_agreement(coding, c);
}

TEST(CorpusCoding, AllOnesIsTiny) {
  const auto c = make_corpus("all-ones", 1, 1000000);
  const auto coding = code_corpus_frequency(c);
  EXPECT_LT(coding.payload.size(), 100u);
  expect_agreement(coding, c);
}

TEST(CorpusCoding, SkewedIidAgrees) {
  const auto c = make_corpus("iid(0.05)", 3, 200000);
  expect_agreement(code_corpus_frequency(c), c);
}

TEST(CorpusCoding, ContextBeatsFrequencyOnCorrelatedLattice) {
  const auto c = make_corpus("multiscale-correlated", 1);
  const auto freq = code_corpus_frequency(c);
  FitOptions fit;
  fit.iterations = 300;
  const auto bank = fit_corpus_context(c, 3, fit);
  const auto ctx = code_corpus_context(c, bank, 3);
  expect_agreement(freq, c);
  expect_agreement(ctx, c);
  EXPECT_LE(static_cast<double>(ctx.payload.size()), 0.9 * static_cast<double>(freq.payload.size()));
  EXPECT_EQ(code_corpus_context(c, bank, 3, 3).payload, ctx.payload);
}

}  // namespace
}  // namespace cnc
