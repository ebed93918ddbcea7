// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cnc/model.hpp"

namespace cnc {

// Full-precision training state: latents, fusers, dense net, occupancy and
// the resolved config text that produced them.
struct Checkpoint {
  std::string config_text;
  GeometryOptions geometry;
  FieldModel model;
};

// "CNCK" container, little-endian, byte-deterministic for a given state.
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
// Throws StreamError on malformed input.
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace cnc
