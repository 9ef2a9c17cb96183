#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rasnet/layers.hpp"

namespace rasnet {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// First/second moment estimates for a fixed list of parameters. Moments are
/// allocated on the first step to mirror the parameter shapes.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  /// Compact little-endian binary encoding; round trips bit-exactly.
  std::vector<std::uint8_t> serialize() const;
  static AdamState deserialize(std::span<const std::uint8_t> bytes);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update of every parameter from its gradient.
void adam_step(std::span<Param<float>* const> params, AdamState& state);

}  // namespace rasnet
