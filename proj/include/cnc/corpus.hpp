// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnc/context.hpp"
#include "cnc/rate.hpp"

namespace cnc {

// Synthetic sign corpora for codec benchmarks.
//   iid(p)                 one flat sequence, P(+1) = p
//   all-ones               one flat sequence of +1
//   multiscale-correlated  dense 3D lattices at resolutions 3, 7, 15, 31, 63
//                          with F = 2, thresholding a shared smooth field
struct CorpusLevel {
  int resolution = 0;  // 0 for a flat sequence, else lattice cells per axis
  std::vector<std::int8_t> thetas;

  bool operator==(const CorpusLevel&) const = default;
};

struct Corpus {
  std::string kind;  // canonical name, e.g. "iid(0.5)"
  std::uint64_t seed = 0;
  int feature_dim = 1;
  std::vector<CorpusLevel> levels;

  std::uint64_t bit_count() const;
  bool operator==(const Corpus&) const = default;
};

inline constexpr std::uint64_t kDefaultCorpusBits = 1000000;

// `bits` sizes the flat kinds; the lattice kind has a fixed size. Throws
// std::invalid_argument for unknown kinds or p outside (0, 1).
Corpus make_corpus(const std::string& kind, std::uint64_t seed, std::uint64_t bits = kDefaultCorpusBits);

// "CNCB" container. read_corpus throws StreamError on malformed input.
std::vector<std::uint8_t> write_corpus(const Corpus& corpus);
Corpus read_corpus(std::span<const std::uint8_t> bytes);

struct CorpusCoding {
  std::vector<std::uint8_t> payload;  // one range-coded stream over all levels
  std::vector<double> probs;          // P(+1) per theta, as coded (16-bit)
  double estimated_bits = 0.0;        // bit estimates under `probs`
  std::uint64_t coded_bits() const { return payload.size() * 8ull; }
};

// Codes every level with its own occurrence frequency.
CorpusCoding code_corpus_frequency(const Corpus& corpus);

// Lattice levels as embeddings (non-hashed, every vertex valid).
std::vector<LevelEmbedding> corpus_embeddings(const Corpus& corpus);

// Trains level-wise 3D fusers (L_c previous levels) on a lattice corpus.
FuserBank fit_corpus_context(const Corpus& corpus, int context_levels, const FitOptions& options);

// Codes a lattice corpus with fusers; the first level uses its frequency.
CorpusCoding code_corpus_context(const Corpus& corpus, const FuserBank& bank, int context_levels, int threads = 1);

// Decodes a CorpusCoding given the coded probabilities; used to check that
// corpus coding is lossless.
std::vector<std::int8_t> decode_corpus_payload(std::span<const std::uint8_t> payload, std::span<const double> probs);

}  // namespace cnc
