#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "oracles.hpp"
#include "rasnet/dataset.hpp"
#include "rasnet/error.hpp"
#include "tempdir.hpp"

namespace rasnet {
namespace {

using test::slurp;
using test::spit;
using test::TempDir;

TEST(Materials, EighteenValidStableEntries) {
  const auto lib = material_library();
  ASSERT_EQ(lib.size(), 18u);
  std::set<std::string_view> names;
  int magnetic = 0;
  for (const auto& m : lib) {
    EXPECT_NO_THROW(validate(m.spec)) << m.name;
    names.insert(m.name);
    magnetic += m.spec.mu_r > 1.0;
    EXPECT_EQ(&find_material(m.name), &m);
  }
  EXPECT_EQ(names.size(), 18u);
  EXPECT_EQ(magnetic, 2);
  EXPECT_THROW(find_material("unobtainium"), UsageError);
}

TEST(ConfigVector, RoundTripsRandomStacks) {
  Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    const StackConfig s = test::random_stack(rng);
    const ConfigVector v = encode_config(s);
    for (float x : v) {
      ASSERT_GE(x, 0.0f);
      ASSERT_LE(x, 1.0f);
    }
    if (s.n_layers() == 1) {
      for (int k = 8; k <= 12; ++k) ASSERT_EQ(v[k], 0.0f);
    }
    const StackConfig d = decode_config(v);
    const auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b));
    };
    ASSERT_EQ(d.n_layers(), s.n_layers());
    ASSERT_EQ(d.pattern_kind, s.pattern_kind);
    ASSERT_TRUE(close(d.sheet_resistance_ohm_sq, s.sheet_resistance_ohm_sq));
    ASSERT_TRUE(close(d.period_mm, s.period_mm));
    for (int l = 0; l < s.n_layers(); ++l) {
      const auto& a = d.layers[l];
      const auto& b = s.layers[l];
      ASSERT_TRUE(close(a.material.eps_r, b.material.eps_r));
      ASSERT_TRUE(close(a.material.tan_de, b.material.tan_de));
      ASSERT_TRUE(close(a.material.mu_r, b.material.mu_r));
      ASSERT_TRUE(close(a.material.tan_dm, b.material.tan_dm));
      ASSERT_TRUE(close(a.thickness_mm, b.thickness_mm));
    }
  }
}

TEST(ConfigVector, HandEncoding) {
  StackConfig s;
  s.layers = {Layer{{12.0, 0.1, 4.0, 0.0}, 5.0}};
  s.pattern_kind = PatternKind::kResistive;
  s.sheet_resistance_ohm_sq = 377.0;
  s.period_mm = 3.0;
  const ConfigVector v = encode_config(s);
  const ConfigVector expected{0, 1, 1, 1, 1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
  for (int k = 0; k < kConfigLength; ++k) EXPECT_NEAR(v[k], expected[k], 1e-7) << k;
}

TEST(Normalization, InvertsExactly) {
  // Float targets map back through 40 t - 40 without rounding.
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const auto t = static_cast<float>(rng.uniform());
    const double db = denormalize_db(t);
    EXPECT_EQ(db, 40.0 * static_cast<double>(t) - 40.0);
    EXPECT_EQ(normalize_db(db), t);
  }
  for (double db = -40.0; db <= 0.0; db += 0.37) {
    EXPECT_NEAR(denormalize_db(normalize_db(db)), db, 40.0 * 0x1.0p-24);
  }
  EXPECT_EQ(normalize_db(-40.0), 0.0f);
  EXPECT_EQ(normalize_db(0.0), 1.0f);
}

TEST(Split, SizesFromFractions) {
  auto s = split(16000, {0.99, 0.005, 0.005}, 1);
  EXPECT_EQ(s.train.size(), 15840u);
  EXPECT_EQ(s.val.size(), 80u);
  EXPECT_EQ(s.test.size(), 80u);

  s = split(2000, {0.9, 0.05, 0.05}, 42);
  EXPECT_EQ(s.train.size(), 1800u);
  EXPECT_EQ(s.val.size(), 100u);
  EXPECT_EQ(s.test.size(), 100u);
}

TEST(Split, DisjointExhaustiveAndSeeded) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = split(317, {0.7, 0.2, 0.1}, seed);
    std::vector<std::uint32_t> all;
    all.insert(all.end(), s.train.begin(), s.train.end());
    all.insert(all.end(), s.val.begin(), s.val.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), 317u);
    for (std::uint32_t i = 0; i < 317; ++i) ASSERT_EQ(all[i], i);
  }
  EXPECT_EQ(split(100, {0.8, 0.1, 0.1}, 3).train, split(100, {0.8, 0.1, 0.1}, 3).train);
  EXPECT_NE(split(100, {0.8, 0.1, 0.1}, 3).train, split(100, {0.8, 0.1, 0.1}, 4).train);
}

TEST(Split, RejectsEmptyOrInvalid) {
  EXPECT_THROW(split(100, {0.999, 0.0005, 0.0005}, 1), UsageError);
  EXPECT_THROW(split(100, {0.5, 0.2, 0.2}, 1), UsageError);
  EXPECT_THROW(split(100, {1.0, 0.0, 0.0}, 1), UsageError);
}

TEST(Generate, RoundRobinClassesAndValidTargets) {
  const Dataset ds = generate(64, 16, 5, 1);
  ASSERT_EQ(ds.size(), 64u);
  std::vector<int> counts(kPatternClassCount, 0);
  for (auto c : ds.classes) ++counts[c];
  for (int c : counts) EXPECT_EQ(c, 4);
  for (float t : ds.targets) {
    ASSERT_GE(t, 0.0f);
    ASSERT_LE(t, 1.0f);
  }
  for (float x : ds.configs) {
    ASSERT_GE(x, 0.0f);
    ASSERT_LE(x, 1.0f);
  }
  for (float p : ds.images) {
    ASSERT_GE(p, 0.0f);
    ASSERT_LE(p, 1.0f);
  }
}

TEST(Generate, LargeDatasetIsExactlyBalanced) {
  const Dataset ds = generate(16000, 16, 9, 0);
  std::vector<int> counts(kPatternClassCount, 0);
  for (auto c : ds.classes) ++counts[c];
  for (int c : counts) EXPECT_EQ(c, 1000);
}

TEST(Generate, SampleDependsOnlyOnSeedAndIndex) {
  const Dataset a = generate(40, 16, 77, 1);
  const Dataset b = generate(40, 16, 77, 3);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.configs, b.configs);
  EXPECT_EQ(a.targets, b.targets);

  const Dataset longer = generate(57, 16, 77, 2);
  EXPECT_TRUE(std::equal(a.targets.begin(), a.targets.end(), longer.targets.begin()));

  const Dataset other = generate(40, 16, 78, 1);
  EXPECT_NE(a.targets, other.targets);
}

TEST(Generate, TargetsMatchOracle) {
  const Dataset ds = generate(20, 32, 3, 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const SampleRecipe r = sample_recipe(3, i, 32);
    const Spectrum s = reflection_spectrum(r.stack, render(r.pattern, 32));
    EXPECT_EQ(ds.grid(i), render(r.pattern, 32));
    for (int k = 0; k < kSpectrumPoints; ++k) {
      ASSERT_EQ(ds.target(i)[k], normalize_db(s.s11_db[k]));
    }
  }
}

TEST(Generate, RejectsTooFewSamples) { EXPECT_THROW(generate(19, 16, 1, 1), UsageError); }

class DatasetFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    ds_ = generate(30, 16, 11, 1);
    assign_splits(ds_, {0.8, 0.1, 0.1}, 11);
    save(ds_, dir_.path());
  }
  TempDir dir_{"dataset"};
  Dataset ds_;
};

TEST_F(DatasetFiles, RoundTripIsBitExact) {
  const Dataset back = load(dir_.path());
  EXPECT_EQ(back.images, ds_.images);
  EXPECT_EQ(back.configs, ds_.configs);
  EXPECT_EQ(back.targets, ds_.targets);
  EXPECT_EQ(back.classes, ds_.classes);
  EXPECT_EQ(back.splits.train, ds_.splits.train);
  EXPECT_EQ(back.splits.test, ds_.splits.test);
  EXPECT_EQ(back.master_seed, 11u);
  EXPECT_EQ(back.resolution, 16);
}

TEST_F(DatasetFiles, RegenerationIsByteIdentical) {
  TempDir again("dataset-again");
  Dataset ds = generate(30, 16, 11, 2);
  assign_splits(ds, {0.8, 0.1, 0.1}, 11);
  save(ds, again.path());
  for (const char* f : {"manifest.json", "images.f32", "configs.f32", "targets.f32"}) {
    EXPECT_EQ(slurp(dir_ / f), slurp(again / f)) << f;
  }
}

TEST_F(DatasetFiles, TensorFilesAreLittleEndianFloat32) {
  const std::string bytes = slurp(dir_ / "targets.f32");
  ASSERT_EQ(bytes.size(), 30u * 201 * 4);
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
  std::uint32_t word = u[0] | (u[1] << 8) | (u[2] << 16) | (static_cast<std::uint32_t>(u[3]) << 24);
  float first;
  std::memcpy(&first, &word, 4);
  EXPECT_EQ(first, ds_.targets[0]);
}

TEST_F(DatasetFiles, WrongSampleCountFailsSizeCheck) {
  auto m = nlohmann::json::parse(slurp(dir_ / "manifest.json"));
  m["sample_count"] = 31;
  spit(dir_ / "manifest.json", m.dump(2));
  EXPECT_THROW(load(dir_.path()), DataError);
}

TEST_F(DatasetFiles, CorruptedTensorFailsChecksum) {
  std::string bytes = slurp(dir_ / "configs.f32");
  bytes[100] ^= 0x20;
  spit(dir_ / "configs.f32", bytes);
  EXPECT_THROW(load(dir_.path()), DataError);
}

TEST_F(DatasetFiles, TruncatedTensorFails) {
  std::string bytes = slurp(dir_ / "images.f32");
  bytes.resize(bytes.size() - 4);
  spit(dir_ / "images.f32", bytes);
  EXPECT_THROW(load(dir_.path()), DataError);
}

TEST_F(DatasetFiles, VersionMismatchFails) {
  auto m = nlohmann::json::parse(slurp(dir_ / "manifest.json"));
  m["format_version"] = 99;
  spit(dir_ / "manifest.json", m.dump(2));
  EXPECT_THROW(load(dir_.path()), DataError);
}

TEST(DatasetLoad, EmptyDirectoryIsMissingManifest) {
  TempDir empty("empty");
  try {
    load(empty.path());
    FAIL() << "load succeeded on an empty directory";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("manifest"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace rasnet
