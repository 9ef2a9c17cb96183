#pragma once

// Transmission-line reflection oracle for metal-backed metasurface stacks.

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rasnet/geometry.hpp"

namespace rasnet {

using Complex = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;    // m/s
inline constexpr double kFreeSpaceImpedance = 376.730313;  // ohms

inline constexpr int kSpectrumPoints = 201;
inline constexpr double kStartGHz = 2.0;
inline constexpr double kStopGHz = 18.0;
inline constexpr double kStepGHz = (kStopGHz - kStartGHz) / (kSpectrumPoints - 1);

inline constexpr double kDbFloor = -40.0;
inline constexpr double kDbCeil = 0.0;

/// Grid frequency of point i in GHz.
constexpr double grid_frequency_ghz(int i) { return kStartGHz + kStepGHz * i; }

const std::array<double, kSpectrumPoints>& frequency_grid_hz();

struct MaterialSpec {
  double eps_r = 1.0;
  double tan_de = 0.0;
  double mu_r = 1.0;
  double tan_dm = 0.0;
};

/// Throws UsageError when any property is outside the supported ranges.
void validate(const MaterialSpec& m);

enum class PatternKind : int { kMetallic = 0, kResistive = 1 };

inline constexpr double kMetallicSheetResistance = 0.1;
inline constexpr double kMinResistiveSheet = 10.0;
inline constexpr double kMaxResistiveSheet = 377.0;
inline constexpr double kMinThicknessMm = 0.1;
inline constexpr double kMaxThicknessMm = 5.0;
inline constexpr double kMinPeriodMm = 3.0;
inline constexpr double kMaxPeriodMm = 15.0;

struct Layer {
  MaterialSpec material;
  double thickness_mm = 1.0;
};

/// Metal-backed stack; layers are ordered front (illuminated) to back. Each
/// layer carries one patterned sheet on its front face.
struct StackConfig {
  std::vector<Layer> layers;
  PatternKind pattern_kind = PatternKind::kMetallic;
  double sheet_resistance_ohm_sq = kMetallicSheetResistance;
  double period_mm = 10.0;

  int n_layers() const { return static_cast<int>(layers.size()); }
};

void validate(const StackConfig& stack);

struct Spectrum {
  std::array<double, kSpectrumPoints> s11_db{};
};

/// Series-RLC equivalent sheet impedance of a patterned layer.
Complex sheet_impedance(const PatternFeatures& features, double sheet_resistance,
                        double frequency_hz);

/// Resonance frequency of the sheet model in Hz.
double sheet_resonance_hz(const PatternFeatures& features);

/// Impedance looking into the front face. `sheets` holds one entry per layer
/// (front to back); std::nullopt means no sheet on that layer.
Complex input_impedance(const StackConfig& stack,
                        std::span<const std::optional<Complex>> sheets,
                        double frequency_hz);

Complex reflection_coefficient(Complex input_impedance);

/// Sheet impedance as a function of frequency, applied to every layer;
/// returning std::nullopt leaves the layers bare.
using SheetFn = std::function<std::optional<Complex>(double frequency_hz)>;

/// |Gamma| at every grid point, before any dB clipping.
std::array<double, kSpectrumPoints> reflection_magnitudes(const StackConfig& stack,
                                                          const SheetFn& sheet);

/// |Gamma| at every grid point for a stack whose sheets come from `grid`.
std::array<double, kSpectrumPoints> reflection_magnitudes(const StackConfig& stack,
                                                          const RasterGrid& grid);

/// Converts |Gamma| to dB clipped to [-40, 0].
Spectrum to_spectrum(std::span<const double, kSpectrumPoints> magnitudes);

/// S11 in dB, clipped to [-40, 0].
Spectrum reflection_spectrum(const StackConfig& stack, const RasterGrid& grid);

/// Power absorbed per grid point for a metal-backed structure.
std::array<double, kSpectrumPoints> absorption(const Spectrum& spectrum);

struct Band {
  double start_ghz = 0.0;
  double end_ghz = 0.0;
};

/// Maximal runs of grid points with s11_db strictly below the threshold.
std::vector<Band> band_below_threshold(const Spectrum& spectrum, double threshold_db);

/// True when both lists have the same number of bands and every start and
/// end edge differs by at most `tolerance_ghz`. Two empty lists match.
bool bands_match(std::span<const Band> a, std::span<const Band> b, double tolerance_ghz);

}  // namespace rasnet
