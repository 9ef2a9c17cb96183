#include <algorithm>
#include <cmath>

#include "rasnet/dataset.hpp"
#include "rasnet/error.hpp"

namespace rasnet {

namespace {

const double kLogRsSpan = std::log10(kMaxResistiveSheet / kMetallicSheetResistance);

constexpr double kEpsSpan = 11.0;
constexpr double kMuSpan = 3.0;
constexpr double kLossSpan = 0.1;
constexpr double kThicknessSpan = kMaxThicknessMm - kMinThicknessMm;
constexpr double kPeriodSpan = kMaxPeriodMm - kMinPeriodMm;

void encode_layer(const Layer& layer, float* out) {
  out[0] = static_cast<float>((layer.material.eps_r - 1.0) / kEpsSpan);
  out[1] = static_cast<float>(layer.material.tan_de / kLossSpan);
  out[2] = static_cast<float>((layer.material.mu_r - 1.0) / kMuSpan);
  out[3] = static_cast<float>(layer.material.tan_dm / kLossSpan);
  out[4] = static_cast<float>((layer.thickness_mm - kMinThicknessMm) / kThicknessSpan);
}

Layer decode_layer(const float* in) {
  Layer layer;
  layer.material.eps_r = std::clamp(1.0 + kEpsSpan * in[0], 1.0, 12.0);
  layer.material.tan_de = std::clamp(kLossSpan * in[1], 0.0, 0.1);
  layer.material.mu_r = std::clamp(1.0 + kMuSpan * in[2], 1.0, 4.0);
  layer.material.tan_dm = std::clamp(kLossSpan * in[3], 0.0, 0.1);
  layer.thickness_mm = std::clamp(kMinThicknessMm + kThicknessSpan * in[4],
                                  kMinThicknessMm, kMaxThicknessMm);
  return layer;
}

}  // namespace

ConfigVector encode_config(const StackConfig& stack) {
  validate(stack);
  ConfigVector v{};
  v[0] = stack.n_layers() == 2 ? 1.0f : 0.0f;
  v[1] = stack.pattern_kind == PatternKind::kResistive ? 1.0f : 0.0f;
  v[2] = static_cast<float>(
      std::log10(stack.sheet_resistance_ohm_sq / kMetallicSheetResistance) / kLogRsSpan);
  encode_layer(stack.layers[0], &v[3]);
  if (stack.n_layers() == 2) encode_layer(stack.layers[1], &v[8]);
  v[13] = static_cast<float>((stack.period_mm - kMinPeriodMm) / kPeriodSpan);
  return v;
}

StackConfig decode_config(std::span<const float, kConfigLength> v) {
  for (float x : v) {
    if (!(x >= 0.0f && x <= 1.0f)) throw DataError("config entry outside [0, 1]");
  }
  StackConfig stack;
  stack.layers.push_back(decode_layer(&v[3]));
  if (v[0] > 0.5f) stack.layers.push_back(decode_layer(&v[8]));
  if (v[1] > 0.5f) {
    stack.pattern_kind = PatternKind::kResistive;
    stack.sheet_resistance_ohm_sq =
        std::clamp(kMetallicSheetResistance * std::pow(10.0, kLogRsSpan * v[2]),
                   kMinResistiveSheet, kMaxResistiveSheet);
  } else {
    stack.pattern_kind = PatternKind::kMetallic;
    stack.sheet_resistance_ohm_sq = kMetallicSheetResistance;
  }
  stack.period_mm =
      std::clamp(kMinPeriodMm + kPeriodSpan * v[13], kMinPeriodMm, kMaxPeriodMm);
  return stack;
}

}  // namespace rasnet
