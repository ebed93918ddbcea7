// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cnc/field.hpp"

namespace cnc {

// Malformed config text, unknown keys and out-of-range values. The message
// names the offending `section.key`.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// INI text with [field], [grid3d], [grid2d], [model], [context], [train],
// [occupancy] and [codec] sections; see docs/config.md. Missing keys keep
// the defaults of `base`. The result is validated.
TrainConfig parse_config(const std::string& text, const TrainConfig& base = {});
TrainConfig load_config(const std::filesystem::path& path, const TrainConfig& base = {});

// Every key with its resolved value, in schema order. parse_config of the
// result reproduces the config exactly.
std::string format_config(const TrainConfig& cfg);

// `section.key` names accepted by parse_config.
std::vector<std::string> config_keys();

}  // namespace cnc
