// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cnc/codec.hpp"
#include "cnc/model.hpp"
#include "cnc/rate.hpp"

namespace cnc {

enum class FieldKind : std::uint8_t { kSphereShell, kGaussianBlobs, kMengerLike, kCheckerDensity };

const char* field_kind_name(FieldKind kind);
// Throws std::invalid_argument for unknown names.
FieldKind parse_field_kind(const std::string& name);

// Deterministic synthetic scene on [0,1]^3 with values in [0, 1].
class TargetField {
 public:
  TargetField() = default;
  TargetField(FieldKind kind, std::uint64_t seed, int channels);

  FieldKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  int channels() const { return channels_; }

  double density(double x, double y, double z) const;
  // `out` receives channels() values: the density, or the density times a
  // smooth colour ramp when channels() == 3.
  void eval(std::span<const double> xyz, std::span<float> out) const;

  // Shell parameters (sphere-shell only).
  std::array<double, 3> center() const { return center_; }
  static constexpr double kShellRadius = 0.3;
  static constexpr double kShellHalfWidth = 0.03;
  static constexpr double kShellRamp = 0.01;

 private:
  struct Blob {
    std::array<double, 3> c;
    double sigma;
    double amplitude;
  };

  FieldKind kind_ = FieldKind::kSphereShell;
  std::uint64_t seed_ = 0;
  int channels_ = 1;
  std::array<double, 3> center_{0.5, 0.5, 0.5};
  std::vector<Blob> blobs_;
  int depth_ = 2;
  int checks_ = 4;
};

// Throws std::invalid_argument for channels other than 1 or 3.
TargetField synth_field(FieldKind kind, std::uint64_t seed, int channels = 1);

// Raised when training diverges.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  FieldKind field = FieldKind::kSphereShell;
  int channels = 1;
  std::uint64_t field_seed = 1;

  GridConfig grid3d{3, 8, 16, 256, 15, 8};
  GridConfig grid2d{2, 3, 64, 256, 13, 8};
  ContextOptions context;
  NetShape net;

  double lambda = 0.0;
  int iterations = 1500;
  int batch_size = 2048;
  int theta_samples = 2048;  // thetas drawn per iteration for the rate term
  double learning_rate = kBaseLearningRate;
  std::uint64_t seed = 1;
  int threads = 1;

  int occupancy_resolution = 32;
  double occupancy_threshold = 1e-2;
  GeometryOptions geometry;
  int mlp_bits = kDefaultMlpBits;
  MlpRounding mlp_rounding = MlpRounding::kFloor;

  int feature_dim() const { return grid3d.feature_dim; }
  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // Full-size settings from the reference setup.
  static TrainConfig paper_scale();
};

OccupancyGrid field_occupancy(const TargetField& field, const TrainConfig& cfg);

// Field values for a batch of positions (batch x 3) through the concatenated
// level features and the dense net. Output is batch x channels.
void reconstruct(const FieldModel& model, std::span<const double> positions, std::span<float> out, int threads = 1);

struct TrainLogRow {
  int iteration = 0;
  double lr = 0.0;
  double mse = 0.0;
  double estimated_bits = 0.0;  // rescaled to all valid thetas
  double loss = 0.0;
};

struct TrainState {
  FieldModel model;
  FieldGeometry geometry;
  std::vector<TrainLogRow> log;
  double seconds = 0.0;
};

// Hook called after every iteration; used by tests to watch progress.
using TrainObserver = std::function<void(const TrainState&, const TrainLogRow&)>;

// Joint optimization of latents, fusers and dense net. Throws NumericError
// after 10 consecutive non-finite losses.
TrainState train(const TrainConfig& cfg, const TargetField& field, const TrainObserver& observer = {});

// Rate-term levels of a model, with f_G and the PVF taken from its current
// signs. `pvf` must outlive the result.
std::vector<RateLevel> rate_levels(const FieldModel& model, const FieldGeometry& geometry,
                                   const std::optional<Pvf>& pvf);
std::optional<Pvf> model_pvf(const FieldModel& model, const FieldGeometry& geometry);

// Replaces the fusers of `model` with freshly initialized ones for its
// context options and trains them on the current signs.
void fit_context_models(FieldModel& model, const FieldGeometry& geometry, const FitOptions& options);

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kEvalResolution = 64;

using Predictor = std::function<void(std::span<const double> positions, std::span<float> out)>;

// PSNR (peak 1) over the cell centres of a 64^3 lattice that fall in
// occupied cells, capped at 99 dB.
double evaluate_psnr(const Predictor& predictor, int channels, const TargetField& field, const OccupancyGrid& occ);
double evaluate(const FieldModel& model, const TargetField& field, int threads = 1);

// Raised by the audit when a query reads a slot the decoder never fills.
struct UndecodableSlotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AuditReport {
  std::uint64_t queries = 0;
  std::uint64_t corner_reads = 0;
  std::uint64_t undecodable_reads = 0;
};

// Walks every evaluation and training query (the 64^3 lattice points in
// occupied cells plus `random_queries` uniform points inside occupied
// cells) and checks that every corner read with nonzero weight lands on a
// valid slot. Throws UndecodableSlotError on the first miss unless
// `throw_on_miss` is false.
AuditReport audit_decodable(const FieldModel& model, const FieldGeometry& geometry, std::uint64_t seed,
                            std::size_t random_queries = 100000, bool throw_on_miss = true);

struct RdPoint {
  double lambda = 0.0;
  ComponentSizes sizes;
  double psnr_db = 0.0;
  double seconds = 0.0;
  std::optional<std::string> error;
};

// Trains, encodes, decodes and evaluates one point per lambda. Failures are
// recorded on the point and the sweep continues. `on_point` sees each point
// as it completes; `bitstream`, when given, receives the encoded bytes.
RdPoint rd_point(const TrainConfig& cfg, const TargetField& field, double lambda,
                 std::vector<std::uint8_t>* bitstream = nullptr);
std::vector<RdPoint> rd_sweep(const TrainConfig& cfg, const TargetField& field, std::span<const double> lambdas,
                              const std::function<void(const RdPoint&)>& on_point = {});

void write_rd_csv(std::span<const RdPoint> points, std::ostream& os);
void write_rd_json(std::span<const RdPoint> points, const std::string& config_text, std::ostream& os);

}  // namespace cnc
