#include "rasnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include <json.hpp>

#include "rasnet/error.hpp"
#include "rasnet/io.hpp"

namespace rasnet {

namespace {

using nlohmann::json;

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kImagesName = "images.f32";
constexpr const char* kConfigsName = "configs.f32";
constexpr const char* kTargetsName = "targets.f32";

void check_partition(const Splits& s, std::size_t n) {
  std::vector<char> seen(n, 0);
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    for (auto i : *part) {
      if (i >= n || seen[i]) throw DataError("dataset splits overlap or index out of range");
      seen[i] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw DataError("dataset splits do not cover every sample");
  }
}

json file_entry(std::span<const std::uint8_t> bytes, std::vector<std::size_t> shape) {
  return json{{"bytes", bytes.size()}, {"crc32", io::crc32(bytes)}, {"shape", shape}};
}

std::vector<float> load_tensor(const std::filesystem::path& dir, const json& manifest,
                               const char* name, std::size_t expected_floats) {
  const auto bytes = io::read_file(dir / name);
  if (bytes.size() != expected_floats * 4) {
    throw DataError(std::string(name) + ": size " + std::to_string(bytes.size()) +
                    " bytes does not match manifest (expected " +
                    std::to_string(expected_floats * 4) + ")");
  }
  const auto& entry = manifest.at("files").at(name);
  if (entry.at("crc32").get<std::uint32_t>() != io::crc32(bytes)) {
    throw DataError(std::string(name) + ": CRC32 checksum mismatch");
  }
  return io::decode_f32_le(bytes);
}

}  // namespace

unsigned env_thread_count() {
  if (const char* v = std::getenv("RASNET_THREADS")) {
    const int n = std::atoi(v);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 1;
}

RasterGrid Dataset::grid(std::size_t i) const {
  const auto px = image(i);
  return RasterGrid(resolution, std::vector<float>(px.begin(), px.end()));
}

SampleRecipe sample_recipe(std::uint64_t master_seed, std::size_t index, int resolution) {
  Rng rng = Rng::stream(master_seed, index);
  SampleRecipe r;
  const auto cls = static_cast<PatternClass>(index % kPatternClassCount);
  r.pattern = sample_pattern(cls, rng, resolution);

  const auto lib = material_library();
  const int n_layers = 1 + static_cast<int>(rng.below(2));
  for (int k = 0; k < n_layers; ++k) {
    Layer layer;
    layer.material = lib[rng.below(lib.size())].spec;
    layer.thickness_mm = rng.uniform(kMinThicknessMm, kMaxThicknessMm);
    r.stack.layers.push_back(layer);
  }
  if (rng.below(2) == 1) {
    r.stack.pattern_kind = PatternKind::kResistive;
    r.stack.sheet_resistance_ohm_sq = rng.uniform(kMinResistiveSheet, kMaxResistiveSheet);
  } else {
    r.stack.pattern_kind = PatternKind::kMetallic;
    r.stack.sheet_resistance_ohm_sq = kMetallicSheetResistance;
  }
  r.stack.period_mm = rng.uniform(kMinPeriodMm, kMaxPeriodMm);
  return r;
}

Dataset generate(std::size_t n, int resolution, std::uint64_t master_seed, unsigned threads) {
  if (n < 20) throw UsageError("dataset needs at least 20 samples");
  if (resolution < kMinResolution) {
    throw UsageError("resolution must be >= " + std::to_string(kMinResolution));
  }
  Dataset ds;
  ds.resolution = resolution;
  ds.master_seed = master_seed;
  ds.images.resize(n * ds.image_size());
  ds.configs.resize(n * kConfigLength);
  ds.targets.resize(n * kSpectrumPoints);
  ds.classes.resize(n);

  auto make = [&](std::size_t i) {
    const SampleRecipe r = sample_recipe(master_seed, i, resolution);
    const RasterGrid grid = render(r.pattern, resolution);
    const Spectrum spec = reflection_spectrum(r.stack, grid);
    std::copy(grid.pixels().begin(), grid.pixels().end(),
              ds.images.begin() + static_cast<std::ptrdiff_t>(i * ds.image_size()));
    const ConfigVector cfg = encode_config(r.stack);
    std::copy(cfg.begin(), cfg.end(),
              ds.configs.begin() + static_cast<std::ptrdiff_t>(i * kConfigLength));
    for (int k = 0; k < kSpectrumPoints; ++k) {
      ds.targets[i * kSpectrumPoints + static_cast<std::size_t>(k)] = normalize_db(spec.s11_db[k]);
    }
    ds.classes[i] = static_cast<std::uint8_t>(r.pattern.pattern_class);
  };

  if (threads == 0) threads = env_thread_count();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) make(i);
    return ds;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += threads) make(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ds;
}

Splits split(std::size_t n, const SplitFractions& f, std::uint64_t seed) {
  if (!(f.train > 0.0 && f.val > 0.0 && f.test > 0.0)) {
    throw UsageError("split fractions must be positive");
  }
  if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw UsageError("split fractions must sum to 1");
  }
  const auto count = [n](double frac) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
  };
  const std::size_t n_val = count(f.val);
  const std::size_t n_test = count(f.test);
  if (n_val == 0 || n_test == 0 || count(f.train) == 0 || n_val + n_test >= n) {
    throw UsageError("empty split: " + std::to_string(n) +
                     " samples cannot give every split at least one sample");
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng = Rng::stream(seed, 0, /*domain=*/0x5b17);
  rng.shuffle(order.begin(), order.end());

  Splits s;
  const std::size_t n_train = n - n_val - n_test;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

void assign_splits(Dataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
  ds.splits = split(ds.size(), fractions, seed);
  ds.split_seed = seed;
  ds.split_fractions = fractions;
}

void save(const Dataset& ds, const std::filesystem::path& dir) {
  const std::size_t n = ds.size();
  if (ds.images.size() != n * ds.image_size() || ds.targets.size() != n * kSpectrumPoints) {
    throw UsageError("dataset tensors have inconsistent sample counts");
  }
  check_partition(ds.splits, n);
  std::filesystem::create_directories(dir);

  const auto images = io::encode_f32_le(ds.images);
  const auto configs = io::encode_f32_le(ds.configs);
  const auto targets = io::encode_f32_le(ds.targets);
  const auto res = static_cast<std::size_t>(ds.resolution);

  json m;
  m["format_version"] = kDatasetFormatVersion;
  m["sample_count"] = n;
  m["resolution"] = ds.resolution;
  m["config_length"] = kConfigLength;
  m["frequency_grid"] = {{"start_ghz", kStartGHz}, {"stop_ghz", kStopGHz},
                         {"points", kSpectrumPoints}};
  m["master_seed"] = ds.master_seed;
  m["material_library"] = std::string(kMaterialLibraryId);
  m["normalization"] = {{"db_floor", kDbFloor}, {"db_ceil", kDbCeil},
                        {"target", "(s11_db - db_floor) / (db_ceil - db_floor)"}};
  m["splits"] = {{"seed", ds.split_seed},
                 {"fractions", {ds.split_fractions.train, ds.split_fractions.val,
                                ds.split_fractions.test}},
                 {"train", ds.splits.train},
                 {"val", ds.splits.val},
                 {"test", ds.splits.test}};
  m["classes"] = ds.classes;
  m["files"] = {{kImagesName, file_entry(images, {n, res, res})},
                {kConfigsName, file_entry(configs, {n, kConfigLength})},
                {kTargetsName, file_entry(targets, {n, kSpectrumPoints})}};

  io::write_file_atomic(dir / kImagesName, images);
  io::write_file_atomic(dir / kConfigsName, configs);
  io::write_file_atomic(dir / kTargetsName, targets);
  io::write_file_atomic(dir / kManifestName, m.dump(2) + "\n");
}

Dataset load(const std::filesystem::path& dir) {
  const auto manifest_path = dir / kManifestName;
  if (!std::filesystem::exists(manifest_path)) {
    throw DataError("missing manifest: " + manifest_path.string());
  }
  json m;
  try {
    m = json::parse(io::read_text(manifest_path));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  try {
    if (m.at("format_version").get<int>() != kDatasetFormatVersion) {
      throw DataError("unsupported dataset format_version " + m.at("format_version").dump());
    }
    if (m.at("config_length").get<int>() != kConfigLength ||
        m.at("frequency_grid").at("points").get<int>() != kSpectrumPoints) {
      throw DataError("dataset tensor layout does not match this build");
    }
    Dataset ds;
    const auto n = m.at("sample_count").get<std::size_t>();
    ds.resolution = m.at("resolution").get<int>();
    if (ds.resolution < kMinResolution) throw DataError("invalid resolution in manifest");
    ds.master_seed = m.at("master_seed").get<std::uint64_t>();
    ds.images = load_tensor(dir, m, kImagesName, n * ds.image_size());
    ds.configs = load_tensor(dir, m, kConfigsName, n * kConfigLength);
    ds.targets = load_tensor(dir, m, kTargetsName, n * kSpectrumPoints);
    ds.classes = m.at("classes").get<std::vector<std::uint8_t>>();
    if (ds.classes.size() != n) throw DataError("class list length does not match sample_count");
    const auto& s = m.at("splits");
    ds.split_seed = s.at("seed").get<std::uint64_t>();
    const auto fr = s.at("fractions").get<std::vector<double>>();
    if (fr.size() != 3) throw DataError("split fractions must have 3 entries");
    ds.split_fractions = {fr[0], fr[1], fr[2]};
    ds.splits.train = s.at("train").get<std::vector<std::uint32_t>>();
    ds.splits.val = s.at("val").get<std::vector<std::uint32_t>>();
    ds.splits.test = s.at("test").get<std::vector<std::uint32_t>>();
    check_partition(ds.splits, n);
    return ds;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace rasnet
