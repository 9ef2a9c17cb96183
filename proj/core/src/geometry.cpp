#include "rasnet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rasnet/error.hpp"

namespace rasnet {

namespace {

struct ClassInfo {
  PatternClass id;
  std::string_view name;
  std::size_t arity;
  // Sampling range per parameter, {lo, hi}.
  std::array<std::array<double, 2>, 4> ranges;
};

constexpr std::array<ClassInfo, kPatternClassCount> kCatalog{{
    {PatternClass::kSquarePatch, "square_patch", 2,
     {{{0.20, 0.95}, {0.0, 1.0}}}},
    {PatternClass::kCircularPatch, "circular_patch", 2,
     {{{0.25, 1.00}, {0.0, 1.0}}}},
    {PatternClass::kSquareLoop, "square_loop", 2,
     {{{0.40, 0.95}, {0.10, 0.60}}}},
    {PatternClass::kCircularLoop, "circular_loop", 2,
     {{{0.40, 1.00}, {0.10, 0.60}}}},
    {PatternClass::kDoubleSquareLoop, "double_square_loop", 4,
     {{{0.50, 0.95}, {0.10, 0.50}, {0.30, 0.90}, {0.10, 0.60}}}},
    {PatternClass::kDoubleCircularLoop, "double_circular_loop", 4,
     {{{0.50, 1.00}, {0.10, 0.50}, {0.30, 0.90}, {0.10, 0.60}}}},
    {PatternClass::kCrossDipole, "cross_dipole", 2,
     {{{0.40, 0.95}, {0.15, 0.60}}}},
    {PatternClass::kJerusalemCross, "jerusalem_cross", 4,
     {{{0.50, 0.95}, {0.20, 1.00}, {0.20, 0.80}, {0.20, 1.00}}}},
    {PatternClass::kSplitSquareRing, "split_square_ring", 3,
     {{{0.40, 0.95}, {0.10, 0.60}, {0.05, 0.50}}}},
    {PatternClass::kSplitCircularRing, "split_circular_ring", 3,
     {{{0.40, 1.00}, {0.10, 0.60}, {0.05, 0.50}}}},
    {PatternClass::kHexagonalPatch, "hexagonal_patch", 2,
     {{{0.25, 1.00}, {0.0, 1.0}}}},
    {PatternClass::kHexagonalLoop, "hexagonal_loop", 3,
     {{{0.40, 1.00}, {0.10, 0.60}, {0.0, 1.0}}}},
    {PatternClass::kGammadion, "gammadion", 3,
     {{{0.50, 0.95}, {0.20, 1.00}, {0.20, 0.80}}}},
    {PatternClass::kTripole, "tripole", 2,
     {{{0.50, 1.00}, {0.20, 1.00}}}},
    {PatternClass::kGriddedSquarePatch, "gridded_square_patch", 3,
     {{{0.40, 0.95}, {0.0, 1.0}, {0.20, 1.00}}}},
    {PatternClass::kFourLeggedLoadedLoop, "four_legged_loaded_loop", 3,
     {{{0.50, 0.95}, {0.30, 1.00}, {0.15, 0.60}}}},
}};

const ClassInfo& info(PatternClass c) {
  const auto i = static_cast<int>(c);
  if (i < 0 || i >= kPatternClassCount) {
    throw UsageError("unknown pattern class id " + std::to_string(i));
  }
  return kCatalog[static_cast<std::size_t>(i)];
}

// Shape predicates take cell coordinates x, y in (-0.5, 0.5).

bool in_box(double x, double y, double hx, double hy) {
  return std::abs(x) <= hx && std::abs(y) <= hy;
}

bool in_square(double x, double y, double h) { return in_box(x, y, h, h); }

bool in_disc(double x, double y, double r) { return x * x + y * y <= r * r; }

bool in_cross(double x, double y, double half_len, double half_width) {
  return in_box(x, y, half_len, half_width) || in_box(x, y, half_width, half_len);
}

bool in_square_loop(double x, double y, double outer, double inner) {
  return in_square(x, y, outer) && !(std::abs(x) < inner && std::abs(y) < inner);
}

bool in_circular_loop(double x, double y, double outer, double inner) {
  const double r2 = x * x + y * y;
  return r2 <= outer * outer && r2 > inner * inner;
}

bool in_rounded_square(double x, double y, double h, double radius) {
  if (!in_square(x, y, h)) return false;
  const double qx = std::abs(x) - (h - radius);
  const double qy = std::abs(y) - (h - radius);
  return qx <= 0.0 || qy <= 0.0 || qx * qx + qy * qy <= radius * radius;
}

bool in_hexagon(double x, double y, double circumradius, double rotation) {
  const double apothem = circumradius * std::cos(std::numbers::pi / 6.0);
  for (int k = 0; k < 6; ++k) {
    const double a = rotation + std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
    if (x * std::cos(a) + y * std::sin(a) > apothem) return false;
  }
  return true;
}

bool in_split_gap(double x, double y, double gap_half) {
  return x > 0.0 && std::abs(y) < gap_half;
}

bool inside(const PatternSpec& s, double x, double y) {
  const auto& p = s.params;
  switch (s.pattern_class) {
    case PatternClass::kSquarePatch: {
      const double h = p[0] / 2.0;
      return in_rounded_square(x, y, h, p[1] * h);
    }
    case PatternClass::kCircularPatch: {
      const double r = p[0] / 2.0;
      const double t = r * (std::numbers::sqrt2 / 2.0 + (1.0 - std::numbers::sqrt2 / 2.0) * p[1]);
      return in_disc(x, y, r) && in_square(x, y, t);
    }
    case PatternClass::kSquareLoop: {
      const double h = p[0] / 2.0;
      return in_square_loop(x, y, h, h * (1.0 - p[1]));
    }
    case PatternClass::kCircularLoop: {
      const double r = p[0] / 2.0;
      return in_circular_loop(x, y, r, r * (1.0 - p[1]));
    }
    case PatternClass::kDoubleSquareLoop: {
      const double h1 = p[0] / 2.0;
      const double h1_in = h1 * (1.0 - 0.5 * p[1]);
      const double h2 = 0.9 * h1_in * p[2];
      return in_square_loop(x, y, h1, h1_in) ||
             in_square_loop(x, y, h2, h2 * (1.0 - p[3]));
    }
    case PatternClass::kDoubleCircularLoop: {
      const double r1 = p[0] / 2.0;
      const double r1_in = r1 * (1.0 - 0.5 * p[1]);
      const double r2 = 0.9 * r1_in * p[2];
      return in_circular_loop(x, y, r1, r1_in) ||
             in_circular_loop(x, y, r2, r2 * (1.0 - p[3]));
    }
    case PatternClass::kCrossDipole: {
      const double a = p[0] / 2.0;
      return in_cross(x, y, a, 0.5 * p[1] * a);
    }
    case PatternClass::kJerusalemCross: {
      const double a = p[0] / 2.0;
      const double b = 0.3 * p[1] * a;
      const double cap_half = std::max(b, p[2] * a);
      const double cap_thick = 0.3 * p[3] * a;
      if (in_cross(x, y, a, b)) return true;
      const double ax = std::abs(x);
      const double ay = std::abs(y);
      return (ax >= a - cap_thick && ax <= a && ay <= cap_half) ||
             (ay >= a - cap_thick && ay <= a && ax <= cap_half);
    }
    case PatternClass::kSplitSquareRing: {
      const double h = p[0] / 2.0;
      return in_square_loop(x, y, h, h * (1.0 - p[1])) &&
             !in_split_gap(x, y, 0.5 * p[2] * h);
    }
    case PatternClass::kSplitCircularRing: {
      const double r = p[0] / 2.0;
      return in_circular_loop(x, y, r, r * (1.0 - p[1])) &&
             !in_split_gap(x, y, 0.5 * p[2] * r);
    }
    case PatternClass::kHexagonalPatch: {
      const double rot = p[1] * std::numbers::pi / 6.0;
      return in_hexagon(x, y, p[0] / 2.0, rot);
    }
    case PatternClass::kHexagonalLoop: {
      const double r = p[0] / 2.0;
      const double rot = p[2] * std::numbers::pi / 6.0;
      return in_hexagon(x, y, r, rot) && !in_hexagon(x, y, r * (1.0 - p[1]), rot);
    }
    case PatternClass::kGammadion: {
      const double a = p[0] / 2.0;
      const double b = 0.3 * p[1] * a;
      const double hook = p[2] * a;
      if (in_cross(x, y, a, b)) return true;
      // One hook at the +x arm tip, replicated by quarter turns.
      const std::array<std::array<double, 2>, 4> pts{{{x, y}, {y, -x}, {-x, -y}, {-y, x}}};
      for (const auto& q : pts) {
        if (q[0] >= a - 2.0 * b && q[0] <= a && q[1] >= -b && q[1] <= hook) return true;
      }
      return false;
    }
    case PatternClass::kTripole: {
      const double len = p[0] / 2.0;
      const double b = 0.3 * p[1] * len;
      if (in_disc(x, y, b)) return true;
      for (int k = 0; k < 3; ++k) {
        const double ang = std::numbers::pi / 2.0 + k * 2.0 * std::numbers::pi / 3.0;
        const double t = x * std::cos(ang) + y * std::sin(ang);
        const double n = -x * std::sin(ang) + y * std::cos(ang);
        if (t >= 0.0 && t <= len && std::abs(n) <= b) return true;
      }
      return false;
    }
    case PatternClass::kGriddedSquarePatch: {
      const double h = p[0] / 2.0;
      if (!in_square(x, y, h)) return false;
      const int slots = 1 + static_cast<int>(std::floor(p[1] * 3.999));
      const double slot_half = 0.1 * p[2] * h;
      const double pitch = 2.0 * h / (slots + 1);
      for (int k = 1; k <= slots; ++k) {
        const double c = -h + k * pitch;
        if (std::abs(x - c) < slot_half || std::abs(y - c) < slot_half) return false;
      }
      return true;
    }
    case PatternClass::kFourLeggedLoadedLoop: {
      const double a = p[0] / 2.0;
      const double b = 0.5 * p[1] * a;
      const double t = p[2] * b;
      return in_cross(x, y, a, b) && !(std::abs(x) < a - t && std::abs(y) < b - t) &&
             !(std::abs(y) < a - t && std::abs(x) < b - t);
    }
  }
  return false;
}

}  // namespace

const std::array<PatternClass, kPatternClassCount>& all_pattern_classes() {
  static const std::array<PatternClass, kPatternClassCount> classes = [] {
    std::array<PatternClass, kPatternClassCount> out{};
    for (int i = 0; i < kPatternClassCount; ++i) out[i] = static_cast<PatternClass>(i);
    return out;
  }();
  return classes;
}

std::string_view pattern_class_name(PatternClass c) { return info(c).name; }

PatternClass parse_pattern_class(std::string_view name) {
  for (const auto& ci : kCatalog) {
    if (ci.name == name) return ci.id;
  }
  try {
    std::size_t used = 0;
    const int id = std::stoi(std::string(name), &used);
    if (used == name.size() && id >= 0 && id < kPatternClassCount) {
      return static_cast<PatternClass>(id);
    }
  } catch (const std::exception&) {
  }
  throw UsageError("unknown pattern class '" + std::string(name) + "'");
}

std::size_t pattern_arity(PatternClass c) { return info(c).arity; }

void validate(const PatternSpec& spec) {
  const auto arity = pattern_arity(spec.pattern_class);
  if (spec.params.size() != arity) {
    throw UsageError(std::string(pattern_class_name(spec.pattern_class)) + " takes " +
                     std::to_string(arity) + " parameters, got " +
                     std::to_string(spec.params.size()));
  }
  for (double v : spec.params) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw UsageError("pattern parameter outside [0, 1]: " + std::to_string(v));
    }
  }
}

RasterGrid::RasterGrid(int resolution)
    : resolution_(resolution),
      pixels_(static_cast<std::size_t>(resolution) * resolution, 0.0f) {
  if (resolution <= 0) throw UsageError("raster resolution must be positive");
}

RasterGrid::RasterGrid(int resolution, std::vector<float> pixels)
    : resolution_(resolution), pixels_(std::move(pixels)) {
  if (resolution <= 0 ||
      pixels_.size() != static_cast<std::size_t>(resolution) * resolution) {
    throw UsageError("raster pixel count does not match resolution");
  }
  for (float v : pixels_) {
    if (!(v >= 0.0f && v <= 1.0f)) throw UsageError("raster pixel outside [0, 1]");
  }
}

double RasterGrid::fill_factor() const {
  if (pixels_.empty()) return 0.0;
  double sum = 0.0;
  for (float v : pixels_) sum += v;
  return sum / static_cast<double>(pixels_.size());
}

RasterGrid RasterGrid::rotated90() const {
  RasterGrid out(resolution_);
  const int n = resolution_;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) out.at(n - 1 - c, r) = at(r, c);
  }
  return out;
}

RasterGrid render(const PatternSpec& spec, int resolution) {
  if (resolution < kMinResolution) {
    throw UsageError("render resolution must be >= " + std::to_string(kMinResolution));
  }
  validate(spec);
  RasterGrid grid(resolution);
  const int sub = resolution * kSupersample;
  // Sub-sample centers as exact odd fractions so that mirrored samples are
  // exact negations of each other.
  std::vector<double> coord(static_cast<std::size_t>(sub));
  for (int k = 0; k < sub; ++k) {
    coord[static_cast<std::size_t>(k)] =
        static_cast<double>(2 * k + 1 - sub) / static_cast<double>(2 * sub);
  }
  constexpr float kInv = 1.0f / (kSupersample * kSupersample);
  for (int r = 0; r < resolution; ++r) {
    for (int c = 0; c < resolution; ++c) {
      int hits = 0;
      for (int sr = 0; sr < kSupersample; ++sr) {
        const double y = coord[static_cast<std::size_t>(r * kSupersample + sr)];
        for (int sc = 0; sc < kSupersample; ++sc) {
          const double x = coord[static_cast<std::size_t>(c * kSupersample + sc)];
          hits += inside(spec, x, y) ? 1 : 0;
        }
      }
      grid.at(r, c) = static_cast<float>(hits) * kInv;
    }
  }
  return grid;
}

PatternFeatures pattern_features(const RasterGrid& grid) {
  const int n = grid.resolution();
  std::size_t solid = 0;
  std::size_t boundary = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (grid.at(r, c) <= 0.5f) continue;
      ++solid;
      const bool edge = (r > 0 && grid.at(r - 1, c) <= 0.5f) ||
                        (r + 1 < n && grid.at(r + 1, c) <= 0.5f) ||
                        (c > 0 && grid.at(r, c - 1) <= 0.5f) ||
                        (c + 1 < n && grid.at(r, c + 1) <= 0.5f);
      if (edge) ++boundary;
    }
  }
  PatternFeatures f;
  f.fill_factor = grid.fill_factor();
  const double ratio =
      static_cast<double>(boundary) / static_cast<double>(std::max<std::size_t>(1, solid));
  f.perimeter_density = std::clamp(ratio, 0.01, 1.0);
  return f;
}

PatternSpec sample_pattern(PatternClass c, Rng& rng, int check_resolution) {
  const ClassInfo& ci = info(c);
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    PatternSpec spec{c, std::vector<double>(ci.arity)};
    for (std::size_t k = 0; k < ci.arity; ++k) {
      spec.params[k] = rng.uniform(ci.ranges[k][0], ci.ranges[k][1]);
    }
    const double fill = render(spec, check_resolution).fill_factor();
    if (fill >= kMinSampledFill && fill <= kMaxSampledFill) return spec;
  }
  throw DataError("pattern class " + std::string(ci.name) +
                  " produced no visible pattern in 100 attempts");
}

}  // namespace rasnet
