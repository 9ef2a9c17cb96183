#pragma once

// Meta-atom pattern catalog and unit-cell rasterizer.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rasnet/rng.hpp"

namespace rasnet {

enum class PatternClass : int {
  kSquarePatch = 0,
  kCircularPatch,
  kSquareLoop,
  kCircularLoop,
  kDoubleSquareLoop,
  kDoubleCircularLoop,
  kCrossDipole,
  kJerusalemCross,
  kSplitSquareRing,
  kSplitCircularRing,
  kHexagonalPatch,
  kHexagonalLoop,
  kGammadion,
  kTripole,
  kGriddedSquarePatch,
  kFourLeggedLoadedLoop,
};

inline constexpr int kPatternClassCount = 16;

const std::array<PatternClass, kPatternClassCount>& all_pattern_classes();

std::string_view pattern_class_name(PatternClass c);

/// Looks up a class by its snake_case name or numeric id; throws UsageError.
PatternClass parse_pattern_class(std::string_view name);

/// Number of normalized shape parameters the class takes (2..4).
std::size_t pattern_arity(PatternClass c);

/// A pattern class together with its normalized parameters in [0, 1].
///
/// Parameter meaning per class (all lengths are fractions of the unit-cell
/// side; "width fraction" is relative to the enclosing half-extent):
///   square_patch          [side, corner rounding]
///   circular_patch        [diameter, square truncation (1 = pure disc)]
///   square_loop           [outer side, trace width fraction]
///   circular_loop         [outer diameter, trace width fraction]
///   double_square_loop    [outer side, outer width, inner loop size, inner width]
///   double_circular_loop  [outer diameter, outer width, inner loop size, inner width]
///   cross_dipole          [arm length, arm width fraction]
///   jerusalem_cross       [arm length, arm width, cap length, cap width]
///   split_square_ring     [outer side, trace width fraction, gap width]
///   split_circular_ring   [outer diameter, trace width fraction, gap width]
///   hexagonal_patch       [circumdiameter, rotation (0..30 deg)]
///   hexagonal_loop        [circumdiameter, trace width fraction, rotation]
///   gammadion             [arm length, arm width, hook length]
///   tripole               [arm length, arm width]
///   gridded_square_patch  [side, slot count (1..4), slot width]
///   four_legged_loaded_loop [leg length, leg width, trace width fraction]
struct PatternSpec {
  PatternClass pattern_class = PatternClass::kSquarePatch;
  std::vector<double> params;
};

/// Throws UsageError on arity mismatch or a parameter outside [0, 1].
void validate(const PatternSpec& spec);

/// Square grayscale unit-cell image; 1 = pattern material present.
class RasterGrid {
 public:
  RasterGrid() = default;
  explicit RasterGrid(int resolution);
  RasterGrid(int resolution, std::vector<float> pixels);

  int resolution() const noexcept { return resolution_; }
  std::span<const float> pixels() const noexcept { return pixels_; }
  std::span<float> pixels() noexcept { return pixels_; }

  float at(int row, int col) const {
    return pixels_[static_cast<std::size_t>(row) * resolution_ + col];
  }
  float& at(int row, int col) {
    return pixels_[static_cast<std::size_t>(row) * resolution_ + col];
  }

  /// Mean pixel value.
  double fill_factor() const;

  /// Grid rotated by 90 degrees counter-clockwise.
  RasterGrid rotated90() const;

  friend bool operator==(const RasterGrid&, const RasterGrid&) = default;

 private:
  int resolution_ = 0;
  std::vector<float> pixels_;
};

inline constexpr int kMinResolution = 16;
inline constexpr int kSupersample = 4;

/// Rasterizes a centered pattern with 4x4 supersampling per pixel.
RasterGrid render(const PatternSpec& spec, int resolution);

struct PatternFeatures {
  double fill_factor = 0.0;
  double perimeter_density = 0.01;
};

/// Fill factor and boundary-pixel ratio consumed by the sheet model.
PatternFeatures pattern_features(const RasterGrid& grid);

inline constexpr double kMinSampledFill = 0.02;
inline constexpr double kMaxSampledFill = 0.98;

/// Draws parameters uniformly from per-class ranges and rejects draws whose
/// rendering at `check_resolution` has fill outside [0.02, 0.98]. Throws
/// DataError after 100 failed attempts.
PatternSpec sample_pattern(PatternClass c, Rng& rng, int check_resolution = 64);

}  // namespace rasnet
