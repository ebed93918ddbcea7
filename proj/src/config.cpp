// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace cnc {

namespace {

struct Entry {
  const char* section;
  const char* key;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

template <typename T>
std::string format_number(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
Entry number(const char* section, const char* key, T TrainConfig::*field) {
  return {section, key, [field](TrainConfig& c, const std::string& s) { c.*field = parse_number<T>(s); },
          [field](const TrainConfig& c) { return format_number(c.*field); }};
}

template <typename T>
Entry nested(const char* section, const char* key, std::function<T&(TrainConfig&)> ref) {
  return {section, key, [ref](TrainConfig& c, const std::string& s) { ref(c) = parse_number<T>(s); },
          [ref](const TrainConfig& c) { return format_number(ref(const_cast<TrainConfig&>(c))); }};
}

Entry grid_entry(const char* section, const char* key, GridConfig TrainConfig::*grid, int GridConfig::*field) {
  return nested<int>(section, key, [grid, field](TrainConfig& c) -> int& { return (c.*grid).*field; });
}

const std::vector<Entry>& schema() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back({"field", "kind", [](TrainConfig& c, const std::string& s) { c.field = parse_field_kind(trim(s)); },
                 [](const TrainConfig& c) { return std::string(field_kind_name(c.field)); }});
    e.push_back(number("field", "channels", &TrainConfig::channels));
    e.push_back(number("field", "seed", &TrainConfig::field_seed));
    for (auto [section, grid] : {std::pair{"grid3d", &TrainConfig::grid3d}, std::pair{"grid2d", &TrainConfig::grid2d}}) {
      e.push_back(grid_entry(section, "levels", grid, &GridConfig::num_levels));
      e.push_back(grid_entry(section, "min_res", grid, &GridConfig::min_res));
      e.push_back(grid_entry(section, "max_res", grid, &GridConfig::max_res));
      e.push_back(grid_entry(section, "log2_table_size", grid, &GridConfig::table_size_log2));
    }
    e.push_back({"model", "feature_dim",
                 [](TrainConfig& c, const std::string& s) { c.grid3d.feature_dim = c.grid2d.feature_dim = parse_number<int>(s); },
                 [](const TrainConfig& c) { return format_number(c.grid3d.feature_dim); }});
    e.push_back(nested<int>("model", "hidden_layers", [](TrainConfig& c) -> int& { return c.net.hidden_layers; }));
    e.push_back(nested<int>("model", "hidden_width", [](TrainConfig& c) -> int& { return c.net.hidden_width; }));
    e.push_back(nested<int>("context", "levels", [](TrainConfig& c) -> int& { return c.context.context_levels; }));
    e.push_back(
        nested<int>("context", "disable_from", [](TrainConfig& c) -> int& { return c.context.disable_from_level; }));
    e.push_back({"context", "ablation",
                 [](TrainConfig& c, const std::string& s) { c.context.ablation = parse_ablation(trim(s)); },
                 [](const TrainConfig& c) { return std::string(ablation_name(c.context.ablation)); }});
    e.push_back(number("train", "lambda", &TrainConfig::lambda));
    e.push_back(number("train", "iterations", &TrainConfig::iterations));
    e.push_back(number("train", "batch_size", &TrainConfig::batch_size));
    e.push_back(number("train", "theta_samples", &TrainConfig::theta_samples));
    e.push_back(number("train", "learning_rate", &TrainConfig::learning_rate));
    e.push_back(number("train", "seed", &TrainConfig::seed));
    e.push_back(number("train", "threads", &TrainConfig::threads));
    e.push_back(number("occupancy", "resolution", &TrainConfig::occupancy_resolution));
    e.push_back(number("occupancy", "threshold", &TrainConfig::occupancy_threshold));
    e.push_back({"occupancy", "validity",
                 [](TrainConfig& c, const std::string& raw) {
                   const std::string s = trim(raw);
                   if (s == "aoe") c.geometry.rule = ValidityRule::kAreaOfEffect;
                   else if (s == "cell-membership") c.geometry.rule = ValidityRule::kCellMembership;
                   else throw std::invalid_argument("expected aoe or cell-membership, got '" + s + "'");
                 },
                 [](const TrainConfig& c) {
                   return std::string(c.geometry.rule == ValidityRule::kAreaOfEffect ? "aoe" : "cell-membership");
                 }});
    e.push_back({"occupancy", "footprint",
                 [](TrainConfig& c, const std::string& raw) {
                   const std::string s = trim(raw);
                   if (s == "support") c.geometry.footprint = Footprint::kSupport;
                   else if (s == "dual") c.geometry.footprint = Footprint::kDual;
                   else throw std::invalid_argument("expected support or dual, got '" + s + "'");
                 },
                 [](const TrainConfig& c) {
                   return std::string(c.geometry.footprint == Footprint::kSupport ? "support" : "dual");
                 }});
    e.push_back(number("codec", "mlp_bits", &TrainConfig::mlp_bits));
    e.push_back({"codec", "mlp_rounding",
                 [](TrainConfig& c, const std::string& raw) { c.mlp_rounding = parse_mlp_rounding(trim(raw)); },
                 [](const TrainConfig& c) { return std::string(mlp_rounding_name(c.mlp_rounding)); }});
    return e;
  }();
  return entries;
}

const Entry* find_entry(const std::string& section, const std::string& key) {
  for (const Entry& e : schema())
    if (section == e.section && key == e.key) return &e;
  return nullptr;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Entry& e : schema()) out.push_back(std::string(e.section) + "." + e.key);
  return out;
}

TrainConfig parse_config(const std::string& text, const TrainConfig& base) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  TrainConfig cfg = base;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' must live in a section");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const Entry* e = find_entry(section, key);
      if (e == nullptr) throw ConfigError("unknown config key '" + name + "'");
      try {
        e->set(cfg, value.data());
      } catch (const std::exception& ex) {
        throw ConfigError("bad value for '" + name + "': " + ex.what());
      }
    }
  }
  cfg.net.channels = cfg.channels;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("invalid config: ") + ex.what());
  }
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path, const TrainConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string format_config(const TrainConfig& cfg) {
  std::ostringstream os;
  std::string current;
  for (const Entry& e : schema()) {
    if (current != e.section) {
      if (!current.empty()) os << '\n';
      current = e.section;
      os << '[' << current << "]\n";
    }
    os << e.key << " = " << e.get(cfg) << '\n';
  }
  return os.str();
}

}  // namespace cnc
