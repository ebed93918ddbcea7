// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/field.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <random>

#include <json.hpp>

#include "cnc/entropy.hpp"
#include "cnc/parallel.hpp"

namespace cnc {

namespace {

constexpr std::size_t kBatchChunk = 256;
constexpr int kPvfRefresh = 16;
constexpr int kMaxBadSteps = 10;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool in_menger(double u, double v, double w, int depth) {
  if (u < 0.0 || v < 0.0 || w < 0.0 || u >= 1.0 || v >= 1.0 || w >= 1.0) return false;
  for (int d = 0; d < depth; ++d) {
    u *= 3.0;
    v *= 3.0;
    w *= 3.0;
    const int a = static_cast<int>(u), b = static_cast<int>(v), c = static_cast<int>(w);
    if ((a == 1) + (b == 1) + (c == 1) >= 2) return false;
    u -= a;
    v -= b;
    w -= c;
  }
  return true;
}

std::vector<std::array<int, 3>> occupied_cells(const OccupancyGrid& occ) {
  std::vector<std::array<int, 3>> cells;
  const int r = occ.resolution();
  for (int z = 0; z < r; ++z)
    for (int y = 0; y < r; ++y)
      for (int x = 0; x < r; ++x)
        if (occ.occupied(x, y, z)) cells.push_back({x, y, z});
  return cells;
}

// Centres of the evaluation lattice that fall inside occupied cells.
std::vector<double> eval_positions(const OccupancyGrid& occ) {
  std::vector<double> pos;
  for (int z = 0; z < kEvalResolution; ++z)
    for (int y = 0; y < kEvalResolution; ++y)
      for (int x = 0; x < kEvalResolution; ++x) {
        const double p[3] = {(x + 0.5) / kEvalResolution, (y + 0.5) / kEvalResolution, (z + 0.5) / kEvalResolution};
        const auto c = occ.cell_of(p);
        if (occ.occupied(c[0], c[1], c[2])) pos.insert(pos.end(), p, p + 3);
      }
  return pos;
}

// Visits the corners a 3D query reads on each level: fn(level, corners).
template <typename Fn>
void for_each_level_corners(const FieldModel& model, std::span<const double> xyz, Fn&& fn) {
  for (std::size_t l = 0; l < model.levels.size(); ++l) {
    const LevelSpec& spec = model.levels[l].spec;
    if (spec.dims == 3) {
      fn(l, corners_at(spec, xyz));
    } else {
      const auto uv = project_to_plane(spec.plane, xyz);
      fn(l, corners_at(spec, uv));
    }
  }
}

}  // namespace

const char* field_kind_name(FieldKind kind) {
  switch (kind) {
    case FieldKind::kSphereShell: return "sphere-shell";
    case FieldKind::kGaussianBlobs: return "gaussian-blobs";
    case FieldKind::kMengerLike: return "menger-like";
    case FieldKind::kCheckerDensity: return "checker-density";
  }
  return "?";
}

FieldKind parse_field_kind(const std::string& name) {
  for (FieldKind k : {FieldKind::kSphereShell, FieldKind::kGaussianBlobs, FieldKind::kMengerLike,
                      FieldKind::kCheckerDensity})
    if (name == field_kind_name(k)) return k;
  throw std::invalid_argument("unknown field kind '" + name + "'");
}

TargetField::TargetField(FieldKind kind, std::uint64_t seed, int channels)
    : kind_(kind), seed_(seed), channels_(channels) {
  if (channels != 1 && channels != 3) throw std::invalid_argument("field channels must be 1 or 3");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(kind) + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (kind) {
    case FieldKind::kSphereShell:
      for (double& c : center_) c = 0.5 + 0.04 * (u(rng) - 0.5);
      break;
    case FieldKind::kGaussianBlobs:
      for (int i = 0; i < 5; ++i) {
        Blob b;
        for (double& c : b.c) c = 0.25 + 0.5 * u(rng);
        b.sigma = 0.04 + 0.04 * u(rng);
        b.amplitude = 0.6 + 0.4 * u(rng);
        blobs_.push_back(b);
      }
      break;
    case FieldKind::kMengerLike:
      depth_ = 2 + static_cast<int>(seed % 2);
      break;
    case FieldKind::kCheckerDensity:
      checks_ = 3 + static_cast<int>(seed % 3);
      break;
  }
}

double TargetField::density(double x, double y, double z) const {
  switch (kind_) {
    case FieldKind::kSphereShell: {
      const double r = std::sqrt((x - center_[0]) * (x - center_[0]) + (y - center_[1]) * (y - center_[1]) +
                                 (z - center_[2]) * (z - center_[2]));
      const double d = std::abs(r - kShellRadius);
      if (d <= kShellHalfWidth) return 1.0;
      if (d >= kShellHalfWidth + kShellRamp) return 0.0;
      return 1.0 - (d - kShellHalfWidth) / kShellRamp;
    }
    case FieldKind::kGaussianBlobs: {
      double acc = 0.0;
      for (const Blob& b : blobs_) {
        const double r2 = (x - b.c[0]) * (x - b.c[0]) + (y - b.c[1]) * (y - b.c[1]) + (z - b.c[2]) * (z - b.c[2]);
        acc += b.amplitude * std::exp(-r2 / (2.0 * b.sigma * b.sigma));
      }
      acc = std::min(acc, 1.0);
      return acc < 1e-3 ? 0.0 : acc;
    }
    case FieldKind::kMengerLike:
      return in_menger((x - 0.1) / 0.8, (y - 0.1) / 0.8, (z - 0.1) / 0.8, depth_) ? 1.0 : 0.0;
    case FieldKind::kCheckerDensity: {
      const double pi = std::acos(-1.0);
      const double s = std::sin(pi * checks_ * x) * std::sin(pi * checks_ * y) * std::sin(pi * checks_ * z);
      return 0.5 + 0.5 * std::tanh(4.0 * s);
    }
  }
  return 0.0;
}

void TargetField::eval(std::span<const double> xyz, std::span<float> out) const {
  const double d = density(xyz[0], xyz[1], xyz[2]);
  if (channels_ == 1) {
    out[0] = static_cast<float>(d);
    return;
  }
  for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(d * (0.25 + 0.75 * std::clamp(xyz[c], 0.0, 1.0)));
}

TargetField synth_field(FieldKind kind, std::uint64_t seed, int channels) { return TargetField(kind, seed, channels); }

void TrainConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
  };
  need(grid3d.dims == 3 && grid2d.dims == 2, "grid dims must be 3 and 2");
  grid3d.validate();
  grid2d.validate();
  need(grid3d.feature_dim == grid2d.feature_dim, "feature_dim must match between grids");
  need(channels == 1 || channels == 3, "channels must be 1 or 3");
  need(context.context_levels >= 1, "context levels must be positive");
  need(context.disable_from_level >= 0 && context.disable_from_level <= grid3d.num_levels + 1,
       "disable_from_level must lie in [0, L+1]");
  need(net.hidden_layers >= 0 && net.hidden_width >= 1, "net shape must be positive");
  need(lambda >= 0.0 && std::isfinite(lambda), "lambda must be finite and non-negative");
  need(iterations >= 1, "iterations must be positive");
  need(batch_size >= 1, "batch_size must be positive");
  need(theta_samples >= 1, "theta_samples must be positive");
  need(learning_rate > 0.0, "learning_rate must be positive");
  need(threads >= 1, "threads must be positive");
  need(occupancy_resolution >= 1 && occupancy_resolution <= 1024, "occupancy resolution must lie in [1, 1024]");
  need(occupancy_threshold >= 0.0, "occupancy threshold must be non-negative");
  need(mlp_bits >= 1 && mlp_bits <= 24, "mlp_bits must lie in [1, 24]");
}

TrainConfig TrainConfig::paper_scale() {
  TrainConfig c;
  c.grid3d = {3, 12, 16, 512, 19, 8};
  c.grid2d = {2, 4, 128, 1024, 17, 8};
  c.net.hidden_width = 160;
  c.iterations = 20000;
  c.theta_samples = 150000;
  c.batch_size = 4096;
  c.occupancy_resolution = 128;
  return c;
}

OccupancyGrid field_occupancy(const TargetField& field, const TrainConfig& cfg) {
  return derive_occupancy([&](double x, double y, double z) { return std::abs(field.density(x, y, z)); },
                          cfg.occupancy_resolution, cfg.occupancy_threshold);
}

void reconstruct(const FieldModel& model, std::span<const double> positions, std::span<float> out, int threads) {
  const int width = model.reconstruction_width();
  if (model.net.input_width() != width) throw std::invalid_argument("reconstruct: net input width mismatch");
  const int c = model.net.output_width();
  const std::size_t batch = positions.size() / 3;
  if (positions.size() % 3 != 0 || out.size() != batch * c) throw std::invalid_argument("reconstruct: shape mismatch");
  const std::size_t chunks = (batch + kBatchChunk - 1) / kBatchChunk;
  parallel_for(chunks, threads, [&](std::size_t k) {
    const std::size_t a = k * kBatchChunk, b = std::min(batch, a + kBatchChunk);
    std::vector<float> features((b - a) * width);
    for (std::size_t i = a; i < b; ++i)
      gather_features(model, positions.subspan(i * 3, 3), std::span<float>(features.data() + (i - a) * width, width));
    ForwardCache cache;
    forward(model.net, features, static_cast<int>(b - a), cache);
    std::copy(cache.output().begin(), cache.output().end(), out.begin() + a * c);
  });
}

std::optional<Pvf> model_pvf(const FieldModel& model, const FieldGeometry& geometry) {
  for (const auto& level : model.levels) {
    const LevelPlan plan = plan_level(level.spec, model.context);
    if (level.spec.dims == 2 && plan.use_fuser && plan.key.uses_pvf) {
      const int fine = model.finest_3d();
      return project_pvf(model.levels[fine], geometry.levels[fine].vertex_weight);
    }
  }
  return std::nullopt;
}

std::vector<RateLevel> rate_levels(const FieldModel& model, const FieldGeometry& geometry,
                                   const std::optional<Pvf>& pvf) {
  std::vector<RateLevel> out;
  for (std::size_t i = 0; i < model.levels.size(); ++i) {
    const double f_g = frequency(model.levels[i], geometry.levels[i]).value_or(0.5);
    RateLevel rl;
    rl.embedding = &model.levels[i];
    rl.inputs = context_inputs(model, geometry, i, f_g, pvf ? &*pvf : nullptr);
    out.push_back(rl);
  }
  return out;
}

void fit_context_models(FieldModel& model, const FieldGeometry& geometry, const FitOptions& options) {
  std::vector<LevelSpec> specs;
  for (const auto& level : model.levels) specs.push_back(level.spec);
  model.fusers = make_fuser_bank(specs, model.context, model.feature_dim(), options.seed);
  const auto pvf = model_pvf(model, geometry);
  const auto levels = rate_levels(model, geometry, pvf);
  fit_fusers(model.fusers, levels, options);
}

TrainState train(const TrainConfig& cfg, const TargetField& field, const TrainObserver& observer) {
  cfg.validate();
  if (field.channels() != cfg.channels) throw std::invalid_argument("field channels disagree with config");
  const auto t0 = std::chrono::steady_clock::now();
  TrainState st;
  OccupancyGrid occ = field_occupancy(field, cfg);
  NetShape shape = cfg.net;
  shape.channels = cfg.channels;
  st.model = make_field_model(cfg.grid3d, cfg.grid2d, cfg.context, shape, std::move(occ), cfg.seed);
  FieldModel& m = st.model;
  st.geometry = build_field_geometry(m, cfg.geometry, cfg.threads);
  const FieldGeometry& geo = st.geometry;

  // Slots the decoder never sees are pinned to +1 so training contexts match
  // coding contexts; no query reads them, so they receive no gradient.
  for (std::size_t l = 0; l < m.levels.size(); ++l) {
    auto& e = m.levels[l];
    const int f = e.spec.feature_dim;
    for (std::uint32_t s = 0; s < e.spec.table_size; ++s)
      if (!geo.levels[l].valid(s))
        std::fill_n(e.latent.begin() + static_cast<std::size_t>(s) * f, f, 1.0f);
    e.refresh_signs();
  }

  const auto cells = occupied_cells(m.occupancy);
  const int r_occ = m.occupancy.resolution();
  const int f = m.feature_dim();
  const int width = m.reconstruction_width();
  const int c = cfg.channels;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const double total_theta = static_cast<double>(geo.validity.total_theta);
  const double valid_theta = static_cast<double>(geo.validity.valid_theta);

  std::vector<AdamState> latent_adam;
  std::vector<std::vector<float>> latent_grad;
  for (const auto& e : m.levels) {
    latent_adam.emplace_back(e.latent.size());
    latent_grad.emplace_back(e.latent.size(), 0.0f);
  }
  std::map<FuserKey, AdamState> fuser_adam;
  for (const auto& [key, fuser] : m.fusers) fuser_adam.emplace(key, AdamState(fuser.net.parameter_count()));
  AdamState net_adam(m.net.parameter_count());
  std::vector<float> net_grad(m.net.parameter_count());

  std::mt19937_64 rng(cfg.seed * 0xd1b54a32d192ed03ull + 0x5bd1e995);
  std::uniform_int_distribution<std::size_t> pick_cell(0, cells.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t slot_draws = std::max<std::size_t>(1, (cfg.theta_samples + f - 1) / f);

  std::vector<double> pos(batch * 3);
  std::vector<float> target(batch * c);
  std::vector<float> features(batch * width);
  std::vector<float> pred(batch * c);
  std::vector<float> feature_grad(batch * width);
  std::optional<Pvf> pvf;
  int bad_steps = 0;
  const std::size_t chunks = (batch + kBatchChunk - 1) / kBatchChunk;
  std::vector<std::vector<float>> chunk_grads(chunks);
  std::vector<double> chunk_sq(chunks);

  for (int it = 0; it < cfg.iterations; ++it) {
    const double lr = lr_schedule(it, cfg.iterations, cfg.learning_rate);
    if (it % kPvfRefresh == 0) pvf = model_pvf(m, geo);

    // Reconstruction term on points inside occupied cells.
    for (std::size_t i = 0; i < batch; ++i) {
      const auto& cell = cells[pick_cell(rng)];
      for (int d = 0; d < 3; ++d) pos[i * 3 + d] = (cell[d] + unit(rng)) / r_occ;
    }
    for (std::size_t i = 0; i < batch; ++i)
      field.eval(std::span<const double>(pos.data() + i * 3, 3), std::span<float>(target.data() + i * c, c));
    const float scale = 2.0f / static_cast<float>(batch * c);
    parallel_for(chunks, cfg.threads, [&](std::size_t k) {
      const std::size_t a = k * kBatchChunk, b = std::min(batch, a + kBatchChunk);
      for (std::size_t i = a; i < b; ++i)
        gather_features(m, std::span<const double>(pos.data() + i * 3, 3),
                        std::span<float>(features.data() + i * width, width));
      ForwardCache cache;
      forward(m.net, std::span<const float>(features.data() + a * width, (b - a) * width), static_cast<int>(b - a),
              cache);
      std::vector<float> up((b - a) * c);
      double sq = 0.0;
      for (std::size_t i = 0; i < up.size(); ++i) {
        const float diff = cache.output()[i] - target[a * c + i];
        pred[a * c + i] = cache.output()[i];
        sq += static_cast<double>(diff) * diff;
        up[i] = scale * diff;
      }
      chunk_sq[k] = sq;
      chunk_grads[k].assign(m.net.parameter_count(), 0.0f);
      std::vector<float> in_grad;
      backward(m.net, cache, up, chunk_grads[k], &in_grad);
      std::copy(in_grad.begin(), in_grad.end(), feature_grad.begin() + a * width);
    });
    std::fill(net_grad.begin(), net_grad.end(), 0.0f);
    for (const auto& g : chunk_grads)
      for (std::size_t i = 0; i < g.size(); ++i) net_grad[i] += g[i];
    const double mse = pairwise_sum(chunk_sq) / static_cast<double>(batch * c);

    for (auto& g : latent_grad) std::fill(g.begin(), g.end(), 0.0f);
    for (std::size_t i = 0; i < batch; ++i) {
      const float* fg = feature_grad.data() + i * width;
      for_each_level_corners(m, std::span<const double>(pos.data() + i * 3, 3), [&](std::size_t l, const Corners& cr) {
        float* g = latent_grad[l].data();
        for (int k = 0; k < cr.count; ++k) {
          if (cr.weight[k] == 0.0) continue;
          const float w = static_cast<float>(cr.weight[k]);
          for (int j = 0; j < f; ++j) g[static_cast<std::size_t>(cr.slot[k]) * f + j] += w * fg[l * f + j];
        }
      });
    }

    // Rate term on a uniform sample of valid slots.
    const auto levels = rate_levels(m, geo, pvf);
    const auto samples = sample_valid_slots(levels, slot_draws, rng);
    RateBatch rb;
    bool rate_finite = true;
    try {
      rb = rate_batch(m.fusers, levels, samples, cfg.threads, true);
    } catch (const std::domain_error&) {
      rate_finite = false;  // fusers produced non-finite probabilities
    }
    const double sampled = static_cast<double>(std::max<std::uint64_t>(rb.thetas, 1));
    const double est_bits = rate_finite ? rb.bits * valid_theta / sampled : std::nan("");
    const double loss = mse + cfg.lambda * est_bits / total_theta;

    TrainLogRow row{it, lr, mse, est_bits, loss};
    if (!std::isfinite(loss)) {
      if (++bad_steps >= kMaxBadSteps)
        throw NumericError("training diverged: non-finite loss for " + std::to_string(kMaxBadSteps) + " steps");
      st.log.push_back(row);
      if (observer) observer(st, row);
      continue;
    }
    bad_steps = 0;

    if (cfg.lambda > 0.0) {
      const double k_theta = cfg.lambda / total_theta * valid_theta / sampled;
      std::size_t o = 0;
      for (const SlotRef& s : samples) {
        float* g = latent_grad[s.level].data() + static_cast<std::size_t>(s.slot) * f;
        for (int j = 0; j < f; ++j) g[j] += static_cast<float>(k_theta * rb.d_theta[o++]);
      }
    }
    for (std::size_t l = 0; l < m.levels.size(); ++l) {
      auto& e = m.levels[l];
      auto& g = latent_grad[l];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = binarize_backward(e.latent[i], g[i]);
      adam_step(latent_adam[l], e.latent, g, lr);
      for (float& v : e.latent) v = std::clamp(v, -1.0f, 1.0f);
    }
    for (auto& [key, grad] : rb.fuser_grads) {
      for (float& g : grad) g /= static_cast<float>(sampled);
      adam_step(fuser_adam.at(key), m.fusers.at(key).net.mutable_parameters(), grad, lr);
    }
    adam_step(net_adam, m.net.mutable_parameters(), net_grad, lr);
    for (auto& e : m.levels) e.refresh_signs();

    st.log.push_back(row);
    if (observer) observer(st, row);
  }
  st.seconds = seconds_since(t0);
  return st;
}

double evaluate_psnr(const Predictor& predictor, int channels, const TargetField& field, const OccupancyGrid& occ) {
  const auto pos = eval_positions(occ);
  const std::size_t n = pos.size() / 3;
  if (n == 0) return kPsnrCap;
  constexpr std::size_t kChunk = 4096;
  std::vector<double> sq;
  std::vector<float> pred, target(channels);
  for (std::size_t a = 0; a < n; a += kChunk) {
    const std::size_t b = std::min(n, a + kChunk);
    pred.assign((b - a) * channels, 0.0f);
    predictor(std::span<const double>(pos.data() + a * 3, (b - a) * 3), pred);
    double acc = 0.0;
    for (std::size_t i = a; i < b; ++i) {
      field.eval(std::span<const double>(pos.data() + i * 3, 3), target);
      for (int ch = 0; ch < channels; ++ch) {
        const double d = static_cast<double>(pred[(i - a) * channels + ch]) - target[ch];
        acc += d * d;
      }
    }
    sq.push_back(acc);
  }
  const double mse = pairwise_sum(sq) / static_cast<double>(n * channels);
  if (!(mse > 0.0)) return std::isnan(mse) ? 0.0 : kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double evaluate(const FieldModel& model, const TargetField& field, int threads) {
  return evaluate_psnr(
      [&](std::span<const double> p, std::span<float> out) { reconstruct(model, p, out, threads); },
      model.net.output_width(), field, model.occupancy);
}

AuditReport audit_decodable(const FieldModel& model, const FieldGeometry& geometry, std::uint64_t seed,
                            std::size_t random_queries, bool throw_on_miss) {
  AuditReport report;
  auto pos = eval_positions(model.occupancy);
  const auto cells = occupied_cells(model.occupancy);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int r = model.occupancy.resolution();
  for (std::size_t q = 0; q < random_queries; ++q) {
    const auto& cell = cells[pick(rng)];
    for (int d = 0; d < 3; ++d) pos.push_back((cell[d] + unit(rng)) / r);
  }
  for (std::size_t i = 0; i < pos.size() / 3; ++i) {
    ++report.queries;
    for_each_level_corners(model, std::span<const double>(pos.data() + i * 3, 3), [&](std::size_t l, const Corners& cr) {
      for (int k = 0; k < cr.count; ++k) {
        if (cr.weight[k] == 0.0) continue;
        ++report.corner_reads;
        if (geometry.levels[l].valid(cr.slot[k])) continue;
        ++report.undecodable_reads;
        if (throw_on_miss)
          throw UndecodableSlotError("query (" + std::to_string(pos[i * 3]) + ", " + std::to_string(pos[i * 3 + 1]) +
                                     ", " + std::to_string(pos[i * 3 + 2]) + ") reads undecoded slot " +
                                     std::to_string(cr.slot[k]) + " of level " + std::to_string(l + 1));
      }
    });
  }
  return report;
}

RdPoint rd_point(const TrainConfig& cfg, const TargetField& field, double lambda, std::vector<std::uint8_t>* bitstream) {
  RdPoint point;
  point.lambda = lambda;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    TrainConfig run = cfg;
    run.lambda = lambda;
    const TrainState st = train(run, field);
    EncodeOptions opt;
    opt.mlp_bits = run.mlp_bits;
    opt.mlp_rounding = run.mlp_rounding;
    opt.lambda = lambda;
    opt.threads = run.threads;
    opt.geometry = run.geometry;
    EncodeResult enc = encode_model(st.model, opt);
    const DecodedModel dec = decode_model(enc.bytes, run.threads);
    point.sizes = enc.sizes;
    point.psnr_db = evaluate(dec.model, field, run.threads);
    if (bitstream) *bitstream = std::move(enc.bytes);
  } catch (const std::exception& e) {
    point.error = e.what();
  }
  point.seconds = seconds_since(t0);
  return point;
}

std::vector<RdPoint> rd_sweep(const TrainConfig& cfg, const TargetField& field, std::span<const double> lambdas,
                              const std::function<void(const RdPoint&)>& on_point) {
  if (lambdas.size() < 2) throw std::invalid_argument("rd_sweep needs at least two lambda values");
  std::vector<RdPoint> points;
  for (double lambda : lambdas) {
    points.push_back(rd_point(cfg, field, lambda));
    if (on_point) on_point(points.back());
  }
  return points;
}

void write_rd_csv(std::span<const RdPoint> points, std::ostream& os) {
  os << "lambda,total_bytes,emb3d_bytes,emb2d_bytes,mlp_bytes,ctx_bytes,occ_bytes,psnr_db,seconds\n";
  for (const RdPoint& p : points) {
    os << p.lambda << ',';
    if (p.error) {
      os << "nan,nan,nan,nan,nan,nan,nan," << p.seconds << '\n';
      continue;
    }
    const ComponentSizes& s = p.sizes;
    os << s.total << ',' << s.emb3d << ',' << s.emb2d << ',' << s.mlp << ',' << s.fusers << ',' << s.occupancy << ','
       << p.psnr_db << ',' << p.seconds << '\n';
  }
}

void write_rd_json(std::span<const RdPoint> points, const std::string& config_text, std::ostream& os) {
  nlohmann::ordered_json j;
  j["config"] = config_text;
  j["points"] = nlohmann::ordered_json::array();
  for (const RdPoint& p : points) {
    nlohmann::ordered_json o;
    o["lambda"] = p.lambda;
    if (p.error) {
      o["error"] = *p.error;
    } else {
      o["total_bytes"] = p.sizes.total;
      o["header_bytes"] = p.sizes.header;
      o["emb3d_bytes"] = p.sizes.emb3d;
      o["emb2d_bytes"] = p.sizes.emb2d;
      o["mlp_bytes"] = p.sizes.mlp;
      o["ctx_bytes"] = p.sizes.fusers;
      o["occ_bytes"] = p.sizes.occupancy;
      o["psnr_db"] = p.psnr_db;
    }
    o["seconds"] = p.seconds;
    j["points"].push_back(o);
  }
  os << j.dump(2) << '\n';
}

}  // namespace cnc
