// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace cnc {

// Probabilities cross the coder boundary as P(theta = +1) in 16-bit fixed
// point, restricted to [1, 65535] so neither symbol gets a zero-width range.
inline constexpr int kProbBits = 16;

std::uint16_t quantize_probability(double p);
inline double dequantize_probability(std::uint16_t q) { return q / 65536.0; }

struct StreamError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary range coder: 64-bit low, 32-bit range, byte-wise renormalization
// with carry propagation through a cached byte and a run of pending 0xff.
class RangeEncoder {
 public:
  void encode(int theta, std::uint16_t p_plus);
  void encode(int theta, double p_plus) { encode(theta, quantize_probability(p_plus)); }
  // Flushes the final state and returns the stream. The encoder is reset.
  std::vector<std::uint8_t> finish();
  std::size_t symbols() const { return symbols_; }

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xffffffffu;
  std::uint8_t cache_ = 0;
  std::uint64_t pending_ = 1;  // the cached byte plus pending 0xff bytes
  std::vector<std::uint8_t> out_;
  std::size_t symbols_ = 0;
};

class RangeDecoder {
 public:
  // Throws StreamError("truncated payload") when the stream is too short.
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  int decode(std::uint16_t p_plus);
  int decode(double p_plus) { return decode(quantize_probability(p_plus)); }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xffffffffu;
  std::uint32_t code_ = 0;
};

}  // namespace cnc
