#pragma once

// Synthetic sample generation, configuration encoding, splits and the on-disk
// dataset format.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rasnet/geometry.hpp"
#include "rasnet/physics.hpp"

namespace rasnet {

struct NamedMaterial {
  std::string_view name;
  MaterialSpec spec;
};

inline constexpr std::string_view kMaterialLibraryId = "rasnet-substrates-18-v1";
inline constexpr int kMaterialCount = 18;

/// Default table of 18 commercial substrate materials.
std::span<const NamedMaterial> material_library();

/// Throws UsageError for unknown names.
const NamedMaterial& find_material(std::string_view name);

// --- configuration vector -------------------------------------------------

inline constexpr int kConfigLength = 14;
using ConfigVector = std::array<float, kConfigLength>;

/// Layout: [0] dual-layer flag, [1] resistive flag, [2] log-scaled Rs,
/// [3..7] layer 1 (eps, tan_de, mu, tan_dm, thickness), [8..12] layer 2 or
/// zeros, [13] period. Every entry is in [0, 1].
ConfigVector encode_config(const StackConfig& stack);

/// Inverse of encode_config (up to float rounding).
StackConfig decode_config(std::span<const float, kConfigLength> config);

// --- target normalization -------------------------------------------------

inline float normalize_db(double s11_db) {
  return static_cast<float>((s11_db - kDbFloor) / (kDbCeil - kDbFloor));
}
inline double denormalize_db(double t) { return 40.0 * t - 40.0; }

// --- dataset ----------------------------------------------------------------

struct Splits {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
};

struct SplitFractions {
  double train = 0.9;
  double val = 0.05;
  double test = 0.05;
};

inline constexpr int kDatasetFormatVersion = 1;

/// Packed samples: images [n, res, res], configs [n, 14], targets [n, 201].
struct Dataset {
  int resolution = 0;
  std::uint64_t master_seed = 0;
  std::vector<float> images;
  std::vector<float> configs;
  std::vector<float> targets;
  std::vector<std::uint8_t> classes;  // PatternClass id per sample
  Splits splits;
  std::uint64_t split_seed = 0;
  SplitFractions split_fractions;

  std::size_t size() const { return configs.size() / kConfigLength; }
  std::size_t image_size() const {
    return static_cast<std::size_t>(resolution) * resolution;
  }

  std::span<const float> image(std::size_t i) const {
    return {images.data() + i * image_size(), image_size()};
  }
  std::span<const float, kConfigLength> config(std::size_t i) const {
    return std::span<const float, kConfigLength>(configs.data() + i * kConfigLength,
                                                 kConfigLength);
  }
  std::span<const float, kSpectrumPoints> target(std::size_t i) const {
    return std::span<const float, kSpectrumPoints>(targets.data() + i * kSpectrumPoints,
                                                   kSpectrumPoints);
  }
  RasterGrid grid(std::size_t i) const;
};

/// One fully described generated sample.
struct SampleRecipe {
  PatternSpec pattern;
  StackConfig stack;
};

/// Draws the pattern and stack of sample `index`; depends only on
/// (master_seed, index).
SampleRecipe sample_recipe(std::uint64_t master_seed, std::size_t index, int resolution);

/// Generates n samples. `threads` = 0 picks the RASNET_THREADS environment
/// variable (default 1); output does not depend on the thread count.
Dataset generate(std::size_t n, int resolution, std::uint64_t master_seed,
                 unsigned threads = 0);

/// Seeded shuffle then partition; throws UsageError on a split that would be
/// empty or on fractions that do not sum to 1.
Splits split(std::size_t n, const SplitFractions& fractions, std::uint64_t seed);

/// Fills dataset.splits from split(); records the seed and fractions.
void assign_splits(Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed);

/// Writes manifest.json, images.f32, configs.f32, targets.f32 atomically.
void save(const Dataset& dataset, const std::filesystem::path& directory);

/// Throws DataError on missing manifest, version mismatch, size or CRC32
/// mismatch.
Dataset load(const std::filesystem::path& directory);

/// Number of worker threads from RASNET_THREADS (>= 1).
unsigned env_thread_count();

}  // namespace rasnet
