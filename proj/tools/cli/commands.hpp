#pragma once

// Subcommand implementations behind the `rasnet` executable. Each command
// takes a plain options struct so it can be driven from tests as well as
// from argv.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rasnet/dataset.hpp"
#include "rasnet/surrogate.hpp"

namespace rasnet::cli {

namespace fs = std::filesystem;

inline constexpr double kBandThresholdDb = -10.0;
inline constexpr double kBandToleranceGHz = 0.24;

// --- argument parsing helpers -------------------------------------------------

/// "a,b,c" -> fractions; UsageError unless three non-negative numbers.
SplitFractions parse_split(std::string_view text);

/// "start:stop:step", inclusive of stop up to rounding.
std::vector<double> parse_grid(std::string_view text);

/// Comma-separated numbers.
std::vector<double> parse_numbers(std::string_view text);

/// Inline JSON (starting with '{') or a path to a JSON file:
///   {"layers": [{"material": "rt5880", "thickness_mm": 1.5},
///               {"eps_r": 4.3, "tan_de": 0.02, "thickness_mm": 2}],
///    "pattern_kind": "metallic" | "resistive",
///    "sheet_resistance_ohm_sq": 100, "period_mm": 10}
StackConfig parse_stack(std::string_view json_or_path);

PatternSpec parse_pattern(std::string_view class_name, std::string_view params);

// --- gen ----------------------------------------------------------------------

struct GenOptions {
  std::size_t n = 2000;
  int resolution = 64;
  std::uint64_t seed = 42;
  SplitFractions split;
  fs::path out;
  unsigned threads = 0;
};

Dataset cmd_gen(const GenOptions& options, std::ostream& log);

// --- train --------------------------------------------------------------------

struct TrainOptions {
  fs::path data;
  fs::path out;
  TrainConfig config;
  /// Optional early stop once both validation targets are met.
  std::optional<double> stop_val_mse;
  std::optional<double> stop_val_cs;
  /// Wall-clock budget in seconds; 0 disables it.
  double time_limit_s = 0.0;
};

/// Trains, then writes the model plus history.csv into `out`.
SurrogateModel cmd_train(const TrainOptions& options, std::ostream& log);

std::string history_csv(const TrainingHistory& history);

// --- sweep-delta ----------------------------------------------------------------

struct SweepOptions {
  fs::path data;
  fs::path out;
  std::vector<double> grid;
  TrainConfig config;  // delta is overridden per grid point
  unsigned threads = 0;
};

struct SweepRow {
  double delta = 0.0;
  double val_mse = 0.0;
  double val_mae = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double selected_delta = 0.0;
};

/// Rejects any delta <= 0; writes sweep.csv and sweep.json into `out`.
SweepResult cmd_sweep_delta(const SweepOptions& options, std::ostream& log);

SweepResult sweep_delta(const Dataset& data, const std::vector<double>& grid,
                        const TrainConfig& config, unsigned threads, std::ostream& log);

// --- eval ---------------------------------------------------------------------

struct EvalOptions {
  fs::path model;
  fs::path data;
  std::string split = "test";
  fs::path report;
  std::vector<std::string> command;  // echoed into the report
};

struct SampleBands {
  std::uint32_t index = 0;
  std::string pattern_class;
  std::vector<Band> predicted;
  std::vector<Band> target;
  bool agree = false;
};

struct RunReport {
  std::vector<std::string> command;
  std::uint64_t dataset_seed = 0;
  std::uint64_t split_seed = 0;
  std::optional<std::uint64_t> train_seed;
  std::string dataset_id;
  std::string model_id;
  std::string split;
  Metrics metrics;
  double huber = 0.0;
  std::vector<SampleBands> bands;
  double band_agreement = 0.0;
  double surrogate_seconds_per_sample = 0.0;
  double oracle_seconds_per_sample = 0.0;
  /// surrogate / oracle.
  double time_ratio = 0.0;
};

nlohmann::json to_json(const RunReport& report);

RunReport evaluate_split(SurrogateModel& model, const Dataset& data, std::string_view split);

RunReport cmd_eval(const EvalOptions& options, std::ostream& log);

// --- predict / render / spectrum ------------------------------------------------

struct PredictOptions {
  fs::path model;
  PatternSpec pattern;
  StackConfig stack;
  fs::path out_prefix;
};

struct PredictResult {
  Prediction prediction;
  Spectrum oracle;
};

PredictResult cmd_predict(const PredictOptions& options, std::ostream& log);

std::string prediction_csv(const PredictResult& result);
std::string spectrum_svg(const Spectrum& predicted, const Spectrum& oracle);

/// Binary PGM (P5, maxval 255).
std::string render_pgm(const RasterGrid& grid);

/// freq_ghz,s11_db
std::string spectrum_csv(const Spectrum& spectrum);

// --- entry point ----------------------------------------------------------------

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

/// Parses argv, runs the subcommand and maps errors to exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rasnet::cli
