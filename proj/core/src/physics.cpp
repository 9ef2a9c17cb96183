#include "rasnet/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rasnet/error.hpp"

namespace rasnet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void check_range(double v, double lo, double hi, const char* what) {
  if (!(v >= lo && v <= hi)) {
    throw UsageError(std::string(what) + " = " + std::to_string(v) + " outside [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

const std::array<double, kSpectrumPoints>& frequency_grid_hz() {
  static const std::array<double, kSpectrumPoints> grid = [] {
    std::array<double, kSpectrumPoints> g{};
    for (int i = 0; i < kSpectrumPoints; ++i) g[i] = grid_frequency_ghz(i) * 1e9;
    return g;
  }();
  return grid;
}

void validate(const MaterialSpec& m) {
  check_range(m.eps_r, 1.0, 12.0, "eps_r");
  check_range(m.tan_de, 0.0, 0.1, "tan_de");
  check_range(m.mu_r, 1.0, 4.0, "mu_r");
  check_range(m.tan_dm, 0.0, 0.1, "tan_dm");
}

void validate(const StackConfig& stack) {
  if (stack.n_layers() != 1 && stack.n_layers() != 2) {
    throw UsageError("stack must have 1 or 2 layers, got " +
                     std::to_string(stack.n_layers()));
  }
  for (const auto& layer : stack.layers) {
    validate(layer.material);
    check_range(layer.thickness_mm, kMinThicknessMm, kMaxThicknessMm, "thickness_mm");
  }
  if (stack.pattern_kind == PatternKind::kMetallic) {
    if (stack.sheet_resistance_ohm_sq != kMetallicSheetResistance) {
      throw UsageError("metallic patterns use a fixed 0.1 ohm/sq sheet resistance");
    }
  } else {
    check_range(stack.sheet_resistance_ohm_sq, kMinResistiveSheet, kMaxResistiveSheet,
                "sheet_resistance_ohm_sq");
  }
  check_range(stack.period_mm, kMinPeriodMm, kMaxPeriodMm, "period_mm");
}

double sheet_resonance_hz(const PatternFeatures& features) {
  return 2e9 + 16e9 * std::sqrt(features.perimeter_density) * (1.0 - features.fill_factor);
}

Complex sheet_impedance(const PatternFeatures& features, double sheet_resistance,
                        double frequency_hz) {
  const double fr = sheet_resonance_hz(features);
  const double inductance = 5e-9 * (1.0 - features.fill_factor + 0.05);
  const double capacitance = 1.0 / ((kTwoPi * fr) * (kTwoPi * fr) * inductance);
  const double omega = kTwoPi * frequency_hz;
  return {sheet_resistance, omega * inductance - 1.0 / (omega * capacitance)};
}

Complex input_impedance(const StackConfig& stack,
                        std::span<const std::optional<Complex>> sheets,
                        double frequency_hz) {
  if (sheets.size() != stack.layers.size()) {
    throw UsageError("one sheet entry per layer required");
  }
  const double k0 = kTwoPi * frequency_hz / kSpeedOfLight;
  Complex z{0.0, 0.0};  // PEC backing
  for (std::size_t i = stack.layers.size(); i-- > 0;) {
    const auto& layer = stack.layers[i];
    const auto& m = layer.material;
    const Complex eps_c = m.eps_r * Complex(1.0, -m.tan_de);
    const Complex mu_c = m.mu_r * Complex(1.0, -m.tan_dm);
    const Complex eta = kFreeSpaceImpedance * std::sqrt(mu_c / eps_c);
    const Complex gamma = Complex(0.0, k0) * std::sqrt(mu_c * eps_c);
    const Complex t = std::tanh(gamma * (layer.thickness_mm * 1e-3));
    z = eta * (z + eta * t) / (eta + z * t);
    if (const auto& zs = sheets[i]; zs.has_value()) {
      z = z * *zs / (z + *zs);
    }
    if (!finite(z)) {
      throw NumericError("non-finite input impedance at " +
                         std::to_string(frequency_hz * 1e-9) + " GHz");
    }
  }
  return z;
}

Complex reflection_coefficient(Complex zin) {
  return (zin - kFreeSpaceImpedance) / (zin + kFreeSpaceImpedance);
}

std::array<double, kSpectrumPoints> reflection_magnitudes(const StackConfig& stack,
                                                          const SheetFn& sheet) {
  std::array<double, kSpectrumPoints> out{};
  std::vector<std::optional<Complex>> sheets(stack.layers.size());
  const auto& freqs = frequency_grid_hz();
  for (int i = 0; i < kSpectrumPoints; ++i) {
    const auto zs = sheet ? sheet(freqs[i]) : std::nullopt;
    std::fill(sheets.begin(), sheets.end(), zs);
    const double mag = std::abs(reflection_coefficient(input_impedance(stack, sheets, freqs[i])));
    if (!std::isfinite(mag) || mag > 1.0 + 1e-9) {
      throw NumericError("passivity violated: |Gamma| = " + std::to_string(mag));
    }
    out[i] = mag;
  }
  return out;
}

std::array<double, kSpectrumPoints> reflection_magnitudes(const StackConfig& stack,
                                                          const RasterGrid& grid) {
  validate(stack);
  const PatternFeatures features = pattern_features(grid);
  const double rs = stack.sheet_resistance_ohm_sq;
  return reflection_magnitudes(stack, [&](double f) -> std::optional<Complex> {
    return sheet_impedance(features, rs, f);
  });
}

Spectrum to_spectrum(std::span<const double, kSpectrumPoints> magnitudes) {
  Spectrum s;
  for (int i = 0; i < kSpectrumPoints; ++i) {
    const double db = 20.0 * std::log10(magnitudes[i]);
    // log10(0) = -inf clips to the floor.
    s.s11_db[i] = std::isnan(db) ? kDbFloor : std::clamp(db, kDbFloor, kDbCeil);
  }
  return s;
}

Spectrum reflection_spectrum(const StackConfig& stack, const RasterGrid& grid) {
  const auto mags = reflection_magnitudes(stack, grid);
  return to_spectrum(mags);
}

std::array<double, kSpectrumPoints> absorption(const Spectrum& spectrum) {
  std::array<double, kSpectrumPoints> out{};
  for (int i = 0; i < kSpectrumPoints; ++i) {
    // |S12|^2 = 0 behind a conductor, so A = 1 - |S11|^2.
    out[i] = 1.0 - std::pow(10.0, spectrum.s11_db[i] / 10.0);
  }
  return out;
}

std::vector<Band> band_below_threshold(const Spectrum& spectrum, double threshold_db) {
  if (!(threshold_db >= kDbFloor && threshold_db <= kDbCeil)) {
    throw UsageError("band threshold must lie in [-40, 0] dB");
  }
  std::vector<Band> bands;
  int run_start = -1;
  for (int i = 0; i <= kSpectrumPoints; ++i) {
    const bool below = i < kSpectrumPoints && spectrum.s11_db[i] < threshold_db;
    if (below && run_start < 0) {
      run_start = i;
    } else if (!below && run_start >= 0) {
      bands.push_back({grid_frequency_ghz(run_start), grid_frequency_ghz(i - 1)});
      run_start = -1;
    }
  }
  return bands;
}

bool bands_match(std::span<const Band> a, std::span<const Band> b, double tolerance_ghz) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i].start_ghz - b[i].start_ghz) > tolerance_ghz + 1e-9 ||
        std::abs(a[i].end_ghz - b[i].end_ghz) > tolerance_ghz + 1e-9) {
      return false;
    }
  }
  return true;
}

}  // namespace rasnet
