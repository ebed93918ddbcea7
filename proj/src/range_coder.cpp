// Copyright 2026 The cnc-field Authors
// SPDX-License-Identifier: Apache-2.0
#include "cnc/range_coder.hpp"

#include <algorithm>
#include <cmath>

namespace cnc {

namespace {

constexpr std::uint32_t kTop = 1u << 24;

// Size of the +1 interval. The full-width product keeps both intervals
// within one unit of their exact share, even for the smallest probability.
std::uint32_t split(std::uint32_t range, std::uint16_t p_plus) {
  return static_cast<std::uint32_t>((static_cast<std::uint64_t>(range) * p_plus) >> kProbBits);
}

}  // namespace

std::uint16_t quantize_probability(double p) {
  const long q = std::lround(p * 65536.0);
  return static_cast<std::uint16_t>(std::clamp<long>(q, 1, 65535));
}

void RangeEncoder::shift_low() {
  if (low_ < 0xff000000ull || low_ >= (1ull << 32)) {
    const std::uint8_t carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t byte = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(byte + carry));
      byte = 0xff;
    } while (--pending_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++pending_;
  low_ = (low_ & 0x00ffffffull) << 8;
}

void RangeEncoder::encode(int theta, std::uint16_t p_plus) {
  if (p_plus == 0) throw std::invalid_argument("RangeEncoder: zero probability");
  const std::uint32_t bound = split(range_, p_plus);
  if (theta > 0) {
    range_ = bound;
  } else {
    low_ += bound;
    range_ -= bound;
  }
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
  ++symbols_;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  std::vector<std::uint8_t> out = std::move(out_);
  *this = RangeEncoder();
  return out;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= in_.size()) throw StreamError("truncated payload");
  return in_[pos_++];
}

int RangeDecoder::decode(std::uint16_t p_plus) {
  if (p_plus == 0) throw std::invalid_argument("RangeDecoder: zero probability");
  const std::uint32_t bound = split(range_, p_plus);
  int theta;
  if (code_ < bound) {
    range_ = bound;
    theta = 1;
  } else {
    code_ -= bound;
    range_ -= bound;
    theta = -1;
  }
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  return theta;
}

}  // namespace cnc
