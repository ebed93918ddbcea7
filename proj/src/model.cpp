// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/model.hpp"

#include <stdexcept>

#include "cnc/parallel.hpp"

namespace cnc {

std::size_t FieldModel::group_begin(std::size_t level) const {
  const std::size_t l3 = levels_3d();
  if (level < l3) return 0;
  const std::size_t l2 = levels_2d();
  return l3 + ((level - l3) / l2) * l2;
}

NetShape FieldModel::net_shape() const {
  NetShape s;
  const auto w = net.widths();
  s.hidden_layers = static_cast<int>(w.size()) - 2;
  s.hidden_width = s.hidden_layers > 0 ? w[1] : 0;
  s.channels = net.output_width();
  return s;
}

std::vector<LevelSpec> model_level_specs(const GridConfig& grid3d, const GridConfig& grid2d) {
  if (grid3d.dims != 3 || grid2d.dims != 2) throw std::invalid_argument("model needs a 3D grid and a 2D grid");
  if (grid3d.feature_dim != grid2d.feature_dim) throw std::invalid_argument("3D and 2D feature_dim must match");
  auto specs = make_levels(grid3d);
  for (Plane p : {Plane::kXY, Plane::kXZ, Plane::kYZ}) {
    auto plane = make_levels(grid2d, p);
    specs.insert(specs.end(), plane.begin(), plane.end());
  }
  return specs;
}

DenseNet make_reconstruction_net(int input_width, const NetShape& shape) {
  std::vector<int> widths{input_width};
  for (int i = 0; i < shape.hidden_layers; ++i) widths.push_back(shape.hidden_width);
  widths.push_back(shape.channels);
  return DenseNet(widths, Activation::kRelu, Activation::kIdentity);
}

FieldModel make_field_model(const GridConfig& grid3d, const GridConfig& grid2d, const ContextOptions& context,
                            const NetShape& net, OccupancyGrid occupancy, std::uint64_t seed) {
  FieldModel m;
  m.grid3d = grid3d;
  m.grid2d = grid2d;
  m.context = context;
  m.occupancy = std::move(occupancy);
  const auto specs = model_level_specs(grid3d, grid2d);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    m.levels.push_back(LevelEmbedding::zeros(specs[i]));
    init_latents(m.levels.back(), seed * 1000003ull + i + 1);
  }
  m.fusers = make_fuser_bank(specs, context, grid3d.feature_dim, seed + 17);
  m.net = make_reconstruction_net(m.reconstruction_width(), net);
  m.net.init_kaiming_uniform(seed + 29);
  return m;
}

FieldGeometry build_field_geometry(const FieldModel& model, const GeometryOptions& options, int threads) {
  FieldGeometry g;
  g.options = options;
  g.levels.resize(model.levels.size());
  parallel_for(model.levels.size(), threads, [&](std::size_t i) {
    g.levels[i] = build_level_geometry(model.levels[i].spec, model.occupancy, options);
  });
  g.validity = validity_masks(g.levels);
  return g;
}

ContextInputs context_inputs(const FieldModel& model, const FieldGeometry& geometry, std::size_t level, double f_g,
                             const Pvf* pvf) {
  ContextInputs in;
  in.geometry = &geometry.levels[level];
  in.plan = plan_level(model.levels[level].spec, model.context);
  in.context_levels = model.context.context_levels;
  in.f_g = f_g;
  if (in.plan.use_fuser) {
    const auto it = model.fusers.find(in.plan.key);
    if (it == model.fusers.end()) throw std::logic_error("context_inputs: fuser missing for level");
    in.fuser = &it->second;
    in.previous = model.previous(level);
    if (in.plan.key.uses_pvf) {
      if (pvf == nullptr) throw std::logic_error("context_inputs: level needs a PVF");
      in.pvf = pvf;
    }
  }
  return in;
}

void gather_features(const FieldModel& model, std::span<const double> xyz, std::span<float> out) {
  const int f = model.feature_dim();
  if (static_cast<int>(out.size()) != model.reconstruction_width())
    throw std::invalid_argument("gather_features: output width mismatch");
  std::size_t o = 0;
  for (const auto& level : model.levels) {
    if (level.spec.dims == 3) {
      interpolate(level, xyz, out.subspan(o, f));
    } else {
      const auto uv = project_to_plane(level.spec.plane, xyz);
      interpolate(level, uv, out.subspan(o, f));
    }
    o += f;
  }
}

}  // namespace cnc
