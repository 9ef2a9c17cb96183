#include <string>

#include "rasnet/dataset.hpp"
#include "rasnet/error.hpp"

namespace rasnet {

namespace {

// Nominal datasheet values at 10 GHz; the last two rows are magnetically
// loaded absorber sheets.
constexpr std::array<NamedMaterial, kMaterialCount> kLibrary{{
    {"pmi_foam", {1.05, 0.0017, 1.0, 0.0}},
    {"rt5880", {2.20, 0.0009, 1.0, 0.0}},
    {"rt5870", {2.33, 0.0012, 1.0, 0.0}},
    {"ptfe_woven_glass", {2.55, 0.0022, 1.0, 0.0}},
    {"ro3003", {3.00, 0.0010, 1.0, 0.0}},
    {"ro4003c", {3.38, 0.0027, 1.0, 0.0}},
    {"ro4350b", {3.48, 0.0037, 1.0, 0.0}},
    {"rf35", {3.50, 0.0018, 1.0, 0.0}},
    {"polyimide", {3.50, 0.0080, 1.0, 0.0}},
    {"fr4", {4.30, 0.0250, 1.0, 0.0}},
    {"tmm6", {6.00, 0.0023, 1.0, 0.0}},
    {"ro3006", {6.15, 0.0020, 1.0, 0.0}},
    {"ad600", {6.15, 0.0030, 1.0, 0.0}},
    {"tmm10i", {9.80, 0.0020, 1.0, 0.0}},
    {"ro3010", {10.20, 0.0022, 1.0, 0.0}},
    {"rt6010", {10.20, 0.0023, 1.0, 0.0}},
    {"magnetic_sheet_a", {7.00, 0.0150, 1.50, 0.040}},
    {"magnetic_sheet_b", {10.20, 0.0250, 3.50, 0.080}},
}};

}  // namespace

std::span<const NamedMaterial> material_library() { return kLibrary; }

const NamedMaterial& find_material(std::string_view name) {
  for (const auto& m : kLibrary) {
    if (m.name == name) return m;
  }
  throw UsageError("unknown material '" + std::string(name) + "'");
}

}  // namespace rasnet
