// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/corpus.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "byte_io.hpp"
#include "cnc/entropy.hpp"
#include "cnc/occupancy.hpp"
#include "cnc/range_coder.hpp"

namespace cnc {

namespace {

constexpr char kMagic[4] = {'C', 'N', 'C', 'B'};
constexpr std::uint8_t kVersion = 1;
constexpr std::array<int, 5> kLatticeResolutions = {3, 7, 15, 31, 63};
constexpr int kLatticeFeatures = 2;
constexpr double kLatticeNoise = 0.35;

// Smooth random scalar field: two octaves of trilinear value noise.
class ValueNoise {
 public:
  ValueNoise(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (int o = 0; o < 2; ++o) {
      const int k = kCells[o] + 1;
      lattice_[o].resize(static_cast<std::size_t>(k) * k * k);
      for (double& v : lattice_[o]) v = n(rng);
    }
  }

  double operator()(double x, double y, double z) const {
    return sample(0, x, y, z) + 0.5 * sample(1, x, y, z);
  }

 private:
  static constexpr int kCells[2] = {4, 9};

  double sample(int o, double x, double y, double z) const {
    const int r = kCells[o], k = r + 1;
    const double p[3] = {x * r, y * r, z * r};
    int b[3];
    double t[3];
    for (int d = 0; d < 3; ++d) {
      b[d] = std::min(static_cast<int>(std::floor(p[d])), r - 1);
      t[d] = p[d] - b[d];
    }
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
      const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
      const double w = (dx ? t[0] : 1 - t[0]) * (dy ? t[1] : 1 - t[1]) * (dz ? t[2] : 1 - t[2]);
      acc += w * lattice_[o][(b[0] + dx) + static_cast<std::size_t>(k) * ((b[1] + dy) + static_cast<std::size_t>(k) * (b[2] + dz))];
    }
    return acc;
  }

  std::array<std::vector<double>, 2> lattice_;
};

double parse_probability(const std::string& s) {
  double p = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), p);
  if (ec != std::errc() || ptr != s.data() + s.size() || !(p > 0.0 && p < 1.0))
    throw std::invalid_argument("iid corpus needs p in (0, 1), got '" + s + "'");
  return p;
}

LevelSpec lattice_spec(int resolution, int feature_dim, int index) {
  LevelSpec s;
  s.dims = 3;
  s.index = index;
  s.resolution = resolution;
  s.feature_dim = feature_dim;
  s.table_size = static_cast<std::uint32_t>(s.vertex_count());
  s.hashed = false;
  return s;
}

OccupancyGrid full_occupancy() {
  OccupancyGrid occ(1);
  occ.set(0, 0, 0, true);
  return occ;
}

CorpusCoding code_with(const std::vector<std::int8_t>& thetas, std::vector<double> probs) {
  CorpusCoding out;
  RangeEncoder enc;
  std::vector<double> bits(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const std::uint16_t q = quantize_probability(probs[i]);
    probs[i] = dequantize_probability(q);
    enc.encode(thetas[i], q);
    bits[i] = bit_estimate(clamp_probability(probs[i]), thetas[i]);
  }
  out.payload = enc.finish();
  out.estimated_bits = pairwise_sum(bits);
  out.probs = std::move(probs);
  return out;
}

double level_frequency(const std::vector<std::int8_t>& t) {
  if (t.empty()) return 0.5;
  std::size_t plus = 0;
  for (std::int8_t v : t) plus += v > 0;
  return static_cast<double>(plus) / static_cast<double>(t.size());
}

}  // namespace

std::uint64_t Corpus::bit_count() const {
  std::uint64_t n = 0;
  for (const auto& l : levels) n += l.thetas.size();
  return n;
}

Corpus make_corpus(const std::string& kind, std::uint64_t seed, std::uint64_t bits) {
  Corpus c;
  c.seed = seed;
  std::mt19937_64 rng(seed);
  if (kind == "all-ones") {
    c.kind = kind;
    c.levels.push_back({0, std::vector<std::int8_t>(bits, 1)});
    return c;
  }
  if (kind == "iid" || kind.rfind("iid(", 0) == 0) {
    double p = 0.5;
    if (kind != "iid") {
      if (kind.back() != ')') throw std::invalid_argument("malformed corpus kind '" + kind + "'");
      p = parse_probability(kind.substr(4, kind.size() - 5));
    }
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), p);
    c.kind = "iid(" + std::string(buf, ptr) + ")";
    std::bernoulli_distribution coin(p);
    CorpusLevel level;
    level.thetas.resize(bits);
    for (auto& t : level.thetas) t = coin(rng) ? 1 : -1;
    c.levels.push_back(std::move(level));
    return c;
  }
  if (kind == "multiscale-correlated") {
    c.kind = kind;
    c.feature_dim = kLatticeFeatures;
    std::vector<ValueNoise> fields;
    for (int j = 0; j < kLatticeFeatures; ++j) fields.emplace_back(rng);
    std::normal_distribution<double> noise(0.0, kLatticeNoise);
    for (int r : kLatticeResolutions) {
      CorpusLevel level;
      level.resolution = r;
      const int n = r + 1;
      level.thetas.resize(static_cast<std::size_t>(n) * n * n * kLatticeFeatures);
      std::size_t i = 0;
      for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < n; ++x)
            for (int j = 0; j < kLatticeFeatures; ++j) {
              const double g = fields[j](static_cast<double>(x) / r, static_cast<double>(y) / r,
                                         static_cast<double>(z) / r);
              level.thetas[i++] = g + noise(rng) >= 0.0 ? 1 : -1;
            }
      c.levels.push_back(std::move(level));
    }
    return c;
  }
  throw std::invalid_argument("unknown corpus kind '" + kind + "' (iid(p), multiscale-correlated, all-ones)");
}

std::vector<std::uint8_t> write_corpus(const Corpus& corpus) {
  ByteWriter w;
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
  w.u8(kVersion);
  w.str(corpus.kind);
  w.u64(corpus.seed);
  w.u8(static_cast<std::uint8_t>(corpus.feature_dim));
  w.u32(static_cast<std::uint32_t>(corpus.levels.size()));
  for (const auto& level : corpus.levels) {
    w.u16(static_cast<std::uint16_t>(level.resolution));
    w.u32(static_cast<std::uint32_t>(level.thetas.size()));
    std::uint8_t acc = 0;
    for (std::size_t i = 0; i < level.thetas.size(); ++i) {
      if (level.thetas[i] > 0) acc |= static_cast<std::uint8_t>(1u << (i % 8));
      if (i % 8 == 7) {
        w.u8(acc);
        acc = 0;
      }
    }
    if (level.thetas.size() % 8) w.u8(acc);
  }
  return std::move(w.buffer());
}

Corpus read_corpus(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw StreamError("bad magic: not a corpus file");
  if (bytes[4] != kVersion) throw StreamError("unsupported corpus version " + std::to_string(bytes[4]));
  ByteReader r(bytes.subspan(5));
  Corpus c;
  c.kind = r.str();
  c.seed = r.u64();
  c.feature_dim = r.u8();
  const std::uint32_t n = r.u32();
  for (std::uint32_t l = 0; l < n; ++l) {
    CorpusLevel level;
    level.resolution = r.u16();
    const std::uint32_t count = r.u32();
    const auto packed = r.bytes((count + 7) / 8);
    level.thetas.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) level.thetas[i] = (packed[i / 8] >> (i % 8)) & 1u ? 1 : -1;
    if (level.resolution > 0) {
      const std::uint64_t v = static_cast<std::uint64_t>(level.resolution) + 1;
      if (v * v * v * c.feature_dim != count) throw StreamError("corpus: lattice size mismatch");
    }
    c.levels.push_back(std::move(level));
  }
  if (!r.done()) throw StreamError("corpus: trailing bytes");
  return c;
}

CorpusCoding code_corpus_frequency(const Corpus& corpus) {
  std::vector<std::int8_t> thetas;
  std::vector<double> probs;
  for (const auto& level : corpus.levels) {
    const double p = clamp_probability(level_frequency(level.thetas));
    thetas.insert(thetas.end(), level.thetas.begin(), level.thetas.end());
    probs.insert(probs.end(), level.thetas.size(), p);
  }
  return code_with(thetas, std::move(probs));
}

std::vector<LevelEmbedding> corpus_embeddings(const Corpus& corpus) {
  std::vector<LevelEmbedding> out;
  for (std::size_t l = 0; l < corpus.levels.size(); ++l) {
    const auto& level = corpus.levels[l];
    if (level.resolution <= 0) throw std::invalid_argument("corpus_embeddings: corpus has no lattice levels");
    LevelEmbedding e = LevelEmbedding::zeros(lattice_spec(level.resolution, corpus.feature_dim, static_cast<int>(l) + 1));
    if (e.signs.size() != level.thetas.size()) throw std::invalid_argument("corpus_embeddings: size mismatch");
    e.signs = level.thetas;
    for (std::size_t i = 0; i < e.latent.size(); ++i) e.latent[i] = level.thetas[i];
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

struct LatticeSetup {
  std::vector<LevelEmbedding> embeddings;
  std::vector<LevelGeometry> geometry;
  ContextOptions options;
};

LatticeSetup lattice_setup(const Corpus& corpus, int context_levels) {
  LatticeSetup s;
  s.embeddings = corpus_embeddings(corpus);
  const OccupancyGrid occ = full_occupancy();
  for (const auto& e : s.embeddings) s.geometry.push_back(build_level_geometry(e.spec, occ));
  s.options.context_levels = context_levels;
  return s;
}

ContextInputs lattice_inputs(const LatticeSetup& s, const FuserBank& bank, std::size_t l) {
  ContextInputs in;
  in.geometry = &s.geometry[l];
  in.plan = plan_level(s.embeddings[l].spec, s.options);
  in.context_levels = s.options.context_levels;
  in.f_g = dequantize_frequency(quantize_frequency(frequency(s.embeddings[l], s.geometry[l]).value_or(0.5)));
  in.previous = std::span<const LevelEmbedding>(s.embeddings.data(), l);
  if (in.plan.use_fuser) {
    const auto it = bank.find(in.plan.key);
    if (it == bank.end()) throw std::invalid_argument("corpus context: fuser missing for level");
    in.fuser = &it->second;
  }
  return in;
}

}  // namespace

FuserBank fit_corpus_context(const Corpus& corpus, int context_levels, const FitOptions& options) {
  const LatticeSetup s = lattice_setup(corpus, context_levels);
  std::vector<LevelSpec> specs;
  for (const auto& e : s.embeddings) specs.push_back(e.spec);
  FuserBank bank = make_fuser_bank(specs, s.options, corpus.feature_dim, options.seed);
  std::vector<RateLevel> levels;
  for (std::size_t l = 0; l < s.embeddings.size(); ++l) levels.push_back({&s.embeddings[l], lattice_inputs(s, bank, l)});
  fit_fusers(bank, levels, options);
  return bank;
}

CorpusCoding code_corpus_context(const Corpus& corpus, const FuserBank& bank, int context_levels, int threads) {
  const LatticeSetup s = lattice_setup(corpus, context_levels);
  std::vector<std::int8_t> thetas;
  std::vector<double> probs;
  for (std::size_t l = 0; l < s.embeddings.size(); ++l) {
    const auto p = level_slot_probabilities(lattice_inputs(s, bank, l), threads);
    probs.insert(probs.end(), p.begin(), p.end());
    thetas.insert(thetas.end(), s.embeddings[l].signs.begin(), s.embeddings[l].signs.end());
  }
  return code_with(thetas, std::move(probs));
}

std::vector<std::int8_t> decode_corpus_payload(std::span<const std::uint8_t> payload, std::span<const double> probs) {
  std::vector<std::int8_t> out;
  out.reserve(probs.size());
  if (probs.empty()) return out;
  RangeDecoder dec(payload);
  for (double p : probs) out.push_back(static_cast<std::int8_t>(dec.decode(quantize_probability(p))));
  return out;
}

}  // namespace cnc
