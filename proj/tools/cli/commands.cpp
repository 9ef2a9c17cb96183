#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "rasnet/error.hpp"
#include "rasnet/io.hpp"

namespace rasnet::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string short_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::string> split_on(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

json bands_json(const std::vector<Band>& bands) {
  json out = json::array();
  for (const auto& b : bands) out.push_back({b.start_ghz, b.end_ghz});
  return out;
}

std::vector<std::uint32_t> split_indices(const Dataset& data, std::string_view name) {
  if (name == "train") return data.splits.train;
  if (name == "val") return data.splits.val;
  if (name == "test") return data.splits.test;
  if (name == "all") {
    std::vector<std::uint32_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
    return all;
  }
  throw UsageError("unknown split '" + std::string(name) + "' (train, val, test or all)");
}

Spectrum target_spectrum(const Dataset& data, std::size_t i) {
  Spectrum s;
  const auto t = data.target(i);
  for (int k = 0; k < kSpectrumPoints; ++k) s.s11_db[k] = denormalize_db(t[k]);
  return s;
}

MaterialSpec material_from_json(const json& j) {
  if (j.contains("material")) {
    MaterialSpec m = find_material(j.at("material").get<std::string>()).spec;
    // Explicit properties override the named material.
    m.eps_r = j.value("eps_r", m.eps_r);
    m.tan_de = j.value("tan_de", m.tan_de);
    m.mu_r = j.value("mu_r", m.mu_r);
    m.tan_dm = j.value("tan_dm", m.tan_dm);
    return m;
  }
  MaterialSpec m;
  m.eps_r = j.at("eps_r").get<double>();
  m.tan_de = j.value("tan_de", 0.0);
  m.mu_r = j.value("mu_r", 1.0);
  m.tan_dm = j.value("tan_dm", 0.0);
  return m;
}

}  // namespace

// --- parsing --------------------------------------------------------------------

SplitFractions parse_split(std::string_view text) {
  const auto parts = split_on(text, ',');
  if (parts.size() != 3) throw UsageError("--split expects three fractions a,b,c");
  SplitFractions f{parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
  if (f.train < 0 || f.val < 0 || f.test < 0) throw UsageError("split fractions must be >= 0");
  return f;
}

std::vector<double> parse_grid(std::string_view text) {
  const auto parts = split_on(text, ':');
  if (parts.size() != 3) throw UsageError("--grid expects start:stop:step");
  const double start = parse_double(parts[0]);
  const double stop = parse_double(parts[1]);
  const double step = parse_double(parts[2]);
  if (!(step > 0.0) || stop < start) throw UsageError("--grid needs step > 0 and stop >= start");
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid;
  for (long i = 0; i < count; ++i) grid.push_back(start + step * static_cast<double>(i));
  return grid;
}

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  if (text.empty()) return out;
  for (const auto& p : split_on(text, ',')) out.push_back(parse_double(p));
  return out;
}

StackConfig parse_stack(std::string_view json_or_path) {
  std::string text(json_or_path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || text[first] != '{') {
    try {
      text = io::read_text(std::string(json_or_path));
    } catch (const DataError& e) {
      throw UsageError(std::string("cannot read stack description: ") + e.what());
    }
  }
  StackConfig stack;
  try {
    const json j = json::parse(text);
    for (const auto& l : j.at("layers")) {
      stack.layers.push_back({material_from_json(l), l.at("thickness_mm").get<double>()});
    }
    const std::string kind = j.value("pattern_kind", "metallic");
    if (kind == "metallic") {
      stack.pattern_kind = PatternKind::kMetallic;
      stack.sheet_resistance_ohm_sq = kMetallicSheetResistance;
    } else if (kind == "resistive") {
      stack.pattern_kind = PatternKind::kResistive;
      stack.sheet_resistance_ohm_sq = j.at("sheet_resistance_ohm_sq").get<double>();
    } else {
      throw UsageError("pattern_kind must be 'metallic' or 'resistive'");
    }
    stack.period_mm = j.value("period_mm", stack.period_mm);
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid stack JSON: ") + e.what());
  }
  validate(stack);
  return stack;
}

PatternSpec parse_pattern(std::string_view class_name, std::string_view params) {
  PatternSpec spec{parse_pattern_class(class_name), parse_numbers(params)};
  validate(spec);
  return spec;
}

// --- gen ----------------------------------------------------------------------

Dataset cmd_gen(const GenOptions& o, std::ostream& log) {
  if (o.out.empty()) throw UsageError("gen: --out is required");
  // Validate the split before spending time on generation.
  split(o.n, o.split, o.seed);
  const auto t0 = Clock::now();
  Dataset ds = generate(o.n, o.resolution, o.seed, o.threads);
  assign_splits(ds, o.split, o.seed);
  save(ds, o.out);
  log << "dataset: " << ds.size() << " samples, resolution " << ds.resolution << ", seed "
      << ds.master_seed << ", split " << ds.splits.train.size() << "/" << ds.splits.val.size()
      << "/" << ds.splits.test.size() << ", materials " << kMaterialLibraryId << "\n"
      << "wrote " << o.out.string() << " in " << fixed6(seconds_since(t0)) << " s\n";
  return ds;
}

// --- train --------------------------------------------------------------------

std::string history_csv(const TrainingHistory& h) {
  std::string out = "epoch,train_huber,train_mse,train_mae,train_cs,val_mse,val_mae,val_cs\n";
  for (const auto& r : h.epochs) {
    out += std::to_string(r.epoch) + "," + fixed6(r.train_huber) + "," + fixed6(r.train_mse) +
           "," + fixed6(r.train_mae) + "," + fixed6(r.train_cs) + "," + fixed6(r.val_mse) + "," +
           fixed6(r.val_mae) + "," + fixed6(r.val_cs) + "\n";
  }
  return out;
}

SurrogateModel cmd_train(const TrainOptions& o, std::ostream& log) {
  if (o.out.empty()) throw UsageError("train: --out is required");
  o.config.validate();
  const Dataset ds = load(o.data);
  const auto& c = o.config;
  log << "train: lr=" << short_num(c.learning_rate) << " beta1=" << short_num(c.beta1)
      << " beta2=" << short_num(c.beta2) << " delta=" << short_num(c.delta)
      << " batch=" << c.batch_size << " epochs=" << c.epochs << " seed=" << c.seed
      << " deterministic=" << (c.deterministic ? "true" : "false") << "\n";

  ArchitectureDescriptor desc;
  desc.input_resolution = ds.resolution;
  SurrogateModel model = build(desc, c.seed);
  const auto t0 = Clock::now();
  train(model, ds, c, [&](const EpochRecord& r) {
    log << "epoch " << r.epoch << " train_huber " << fixed6(r.train_huber) << " val_mse "
        << fixed6(r.val_mse) << " val_cs " << fixed6(r.val_cs) << " (" << fixed6(r.seconds)
        << " s)\n"
        << std::flush;
    const bool mse_ok = !o.stop_val_mse || r.val_mse <= *o.stop_val_mse;
    const bool cs_ok = !o.stop_val_cs || r.val_cs >= *o.stop_val_cs;
    if ((o.stop_val_mse || o.stop_val_cs) && mse_ok && cs_ok) {
      log << "validation targets reached at epoch " << r.epoch << "\n";
      return false;
    }
    if (o.time_limit_s > 0.0 && seconds_since(t0) >= o.time_limit_s) {
      log << "time limit reached after epoch " << r.epoch << "\n";
      return false;
    }
    return true;
  });

  save_model(model, o.out);
  io::write_file_atomic(o.out / "history.csv", history_csv(model.history));
  log << "best epoch " << model.history.best_epoch << " val_mse "
      << fixed6(model.history.best_val_mse) << "; wrote " << o.out.string() << "\n";
  return model;
}

// --- sweep-delta ----------------------------------------------------------------

SweepResult sweep_delta(const Dataset& data, const std::vector<double>& grid,
                        const TrainConfig& config, unsigned threads, std::ostream& log) {
  if (grid.empty()) throw UsageError("sweep grid is empty");
  for (double d : grid) {
    if (!(d > 0.0)) {
      throw UsageError("sweep grid contains delta = " + short_num(d) +
                       "; delta must be > 0 because the Huber loss is identically zero at "
                       "delta = 0");
    }
  }
  ArchitectureDescriptor desc;
  desc.input_resolution = data.resolution;

  SweepResult result;
  result.rows.resize(grid.size());
  std::mutex log_mutex;
  const auto run_one = [&](std::size_t i) {
    TrainConfig c = config;
    c.delta = grid[i];
    // Same seed for every point: identical initialization and batch order.
    SurrogateModel model = build(desc, c.seed);
    train(model, data, c);
    const auto& best = model.history.epochs[static_cast<std::size_t>(model.history.best_epoch - 1)];
    result.rows[i] = {grid[i], best.val_mse, best.val_mae};
    std::lock_guard lock(log_mutex);
    log << "delta " << fixed6(grid[i]) << " val_mse " << fixed6(best.val_mse) << " val_mae "
        << fixed6(best.val_mae) << "\n"
        << std::flush;
  };

  if (threads == 0) threads = env_thread_count();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(grid.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_one(i);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t i = t; i < grid.size(); i += threads) run_one(i);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const auto best = std::min_element(result.rows.begin(), result.rows.end(),
                                     [](const SweepRow& a, const SweepRow& b) {
                                       return a.val_mse < b.val_mse;
                                     });
  result.selected_delta = best->delta;
  return result;
}

SweepResult cmd_sweep_delta(const SweepOptions& o, std::ostream& log) {
  if (o.out.empty()) throw UsageError("sweep-delta: --out is required");
  for (double d : o.grid) {
    if (!(d > 0.0)) {
      throw UsageError("sweep grid contains delta = " + short_num(d) +
                       "; delta must be > 0 because the Huber loss is identically zero at "
                       "delta = 0");
    }
  }
  const Dataset ds = load(o.data);
  log << "sweep-delta: " << o.grid.size() << " points, epochs=" << o.config.epochs
      << " seed=" << o.config.seed << "\n";
  SweepResult r = sweep_delta(ds, o.grid, o.config, o.threads, log);

  std::string csv = "delta,val_mse,val_mae\n";
  json rows = json::array();
  for (const auto& row : r.rows) {
    csv += fixed6(row.delta) + "," + fixed6(row.val_mse) + "," + fixed6(row.val_mae) + "\n";
    rows.push_back({{"delta", row.delta}, {"val_mse", row.val_mse}, {"val_mae", row.val_mae}});
  }
  std::filesystem::create_directories(o.out);
  io::write_file_atomic(o.out / "sweep.csv", csv);
  const json report = {{"epochs", o.config.epochs},
                       {"seed", o.config.seed},
                       {"dataset_seed", ds.master_seed},
                       {"rows", rows},
                       {"selected_delta", r.selected_delta}};
  io::write_file_atomic(o.out / "sweep.json", report.dump(2) + "\n");
  log << "selected delta " << fixed6(r.selected_delta) << " (lowest validation MSE)\n";
  return r;
}

// --- eval ---------------------------------------------------------------------

nlohmann::json to_json(const RunReport& r) {
  json samples = json::array();
  for (const auto& s : r.bands) {
    samples.push_back({{"index", s.index},
                       {"class", s.pattern_class},
                       {"predicted_bands", bands_json(s.predicted)},
                       {"target_bands", bands_json(s.target)},
                       {"agree", s.agree}});
  }
  return {{"command", r.command},
          {"seeds",
           {{"dataset", r.dataset_seed},
            {"split", r.split_seed},
            {"train", r.train_seed ? json(*r.train_seed) : json(nullptr)}}},
          {"dataset_id", r.dataset_id},
          {"model_id", r.model_id},
          {"metrics",
           {{r.split,
             {{"mse", r.metrics.mse},
              {"mae", r.metrics.mae},
              {"cs", r.metrics.cosine_similarity},
              {"huber", r.huber}}}}},
          {"bands",
           {{"threshold_db", kBandThresholdDb},
            {"tolerance_ghz", kBandToleranceGHz},
            {"agreement", r.band_agreement},
            {"samples", samples}}},
          {"timing",
           {{"surrogate_seconds_per_sample", r.surrogate_seconds_per_sample},
            {"oracle_seconds_per_sample", r.oracle_seconds_per_sample},
            {"ratio", r.time_ratio}}}};
}

RunReport evaluate_split(SurrogateModel& model, const Dataset& data, std::string_view split) {
  const auto idx = split_indices(data, split);
  if (idx.empty()) throw UsageError("split '" + std::string(split) + "' is empty");
  RunReport r;
  r.split = std::string(split);
  r.dataset_seed = data.master_seed;
  r.split_seed = data.split_seed;
  if (model.train_config) r.train_seed = model.train_config->seed;
  const double delta = model.train_config ? model.train_config->delta : 3.0;
  r.metrics = evaluate(model, data, idx, delta, &r.huber);

  const Tensor pred = predict_normalized(model, data, idx);
  std::size_t agree = 0;
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const auto i = idx[n];
    SampleBands s;
    s.index = i;
    s.pattern_class = std::string(pattern_class_name(static_cast<PatternClass>(data.classes[i])));
    s.predicted = interpret({pred.data() + n * kSpectrumPoints, kSpectrumPoints}).bands;
    s.target = band_below_threshold(target_spectrum(data, i), kBandThresholdDb);
    s.agree = bands_match(s.predicted, s.target, kBandToleranceGHz);
    agree += s.agree ? 1 : 0;
    r.bands.push_back(std::move(s));
  }
  r.band_agreement = static_cast<double>(agree) / static_cast<double>(idx.size());

  // Single-sample latency, comparable to one oracle call.
  double surrogate = 0.0, oracle = 0.0;
  for (const auto i : idx) {
    const RasterGrid grid = data.grid(i);
    ConfigVector cfg;
    std::copy(data.config(i).begin(), data.config(i).end(), cfg.begin());
    auto t0 = Clock::now();
    const Prediction p = predict(model, grid, cfg);
    surrogate += seconds_since(t0);
    const StackConfig stack = decode_config(data.config(i));
    t0 = Clock::now();
    const Spectrum s = reflection_spectrum(stack, grid);
    oracle += seconds_since(t0);
    if (!std::isfinite(p.spectrum.s11_db[0] + s.s11_db[0])) {
      throw NumericError("non-finite spectrum during timing");
    }
  }
  const auto count = static_cast<double>(idx.size());
  r.surrogate_seconds_per_sample = surrogate / count;
  r.oracle_seconds_per_sample = oracle / count;
  r.time_ratio = r.oracle_seconds_per_sample > 0.0
                     ? r.surrogate_seconds_per_sample / r.oracle_seconds_per_sample
                     : 0.0;
  return r;
}

RunReport cmd_eval(const EvalOptions& o, std::ostream& log) {
  if (o.report.empty()) throw UsageError("eval: --report is required");
  const Dataset ds = load(o.data);
  SurrogateModel model = load_model(o.model);
  if (model.descriptor().input_resolution != ds.resolution) {
    throw DataError("model resolution " + std::to_string(model.descriptor().input_resolution) +
                    " does not match dataset resolution " + std::to_string(ds.resolution));
  }
  RunReport r = evaluate_split(model, ds, o.split);
  r.command = o.command;
  r.dataset_id = o.data.string() + "#manifest-crc32:" +
                 hex32(io::crc32(io::read_file(o.data / "manifest.json")));
  r.model_id = o.model.string() + "#weights-crc32:" +
               hex32(io::crc32(io::read_file(o.model / "weights.f32")));
  io::write_file_atomic(o.report, to_json(r).dump(2) + "\n");
  log << "eval " << r.split << ": mse " << fixed6(r.metrics.mse) << " mae "
      << fixed6(r.metrics.mae) << " cs " << fixed6(r.metrics.cosine_similarity)
      << " band agreement " << fixed6(r.band_agreement) << "\n"
      << "timing: surrogate " << fixed6(r.surrogate_seconds_per_sample * 1e3)
      << " ms/sample, oracle " << fixed6(r.oracle_seconds_per_sample * 1e3)
      << " ms/sample, ratio " << fixed6(r.time_ratio) << "\n";
  return r;
}

// --- predict and friends ----------------------------------------------------------

std::string prediction_csv(const PredictResult& r) {
  std::string out = "freq_ghz,s11_db_pred,s11_db_oracle,absorption_pred\n";
  for (int i = 0; i < kSpectrumPoints; ++i) {
    out += fixed6(grid_frequency_ghz(i)) + "," + fixed6(r.prediction.spectrum.s11_db[i]) + "," +
           fixed6(r.oracle.s11_db[i]) + "," + fixed6(r.prediction.absorption[i]) + "\n";
  }
  return out;
}

std::string spectrum_svg(const Spectrum& predicted, const Spectrum& oracle) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 20, kTop = 20, kBottom = 50;
  const auto px = [&](double ghz) {
    return kLeft + (ghz - kStartGHz) / (kStopGHz - kStartGHz) * (kW - kLeft - kRight);
  };
  const auto py = [&](double db) {
    return kTop + (kDbCeil - db) / (kDbCeil - kDbFloor) * (kH - kTop - kBottom);
  };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  const auto polyline = [&](const Spectrum& s, const char* color) {
    std::string pts;
    for (int i = 0; i < kSpectrumPoints; ++i) {
      if (i) pts += ' ';
      pts += num(px(grid_frequency_ghz(i))) + "," + num(py(std::clamp(s.s11_db[i], kDbFloor, kDbCeil)));
    }
    return "  <polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH
      << "\" fill=\"white\"/>\n"
      << "  <g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (int g = 2; g <= 18; g += 2) {
    svg << "    <line x1=\"" << num(px(g)) << "\" y1=\"" << num(py(kDbFloor)) << "\" x2=\""
        << num(px(g)) << "\" y2=\"" << num(py(kDbFloor) + 4) << "\" stroke=\"black\"/>\n"
        << "    <text x=\"" << num(px(g)) << "\" y=\"" << num(py(kDbFloor) + 16)
        << "\" text-anchor=\"middle\">" << g << "</text>\n";
  }
  for (int db = -40; db <= 0; db += 10) {
    svg << "    <line x1=\"" << num(px(kStartGHz) - 4) << "\" y1=\"" << num(py(db)) << "\" x2=\""
        << num(px(kStartGHz)) << "\" y2=\"" << num(py(db)) << "\" stroke=\"black\"/>\n"
        << "    <text x=\"" << num(px(kStartGHz) - 8) << "\" y=\"" << num(py(db) + 4)
        << "\" text-anchor=\"end\">" << db << "</text>\n";
  }
  svg << "    <text x=\"" << num((px(kStartGHz) + px(kStopGHz)) / 2) << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">Frequency (GHz)</text>\n"
      << "    <text x=\"14\" y=\"" << num((py(kDbCeil) + py(kDbFloor)) / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << num((py(kDbCeil) + py(kDbFloor)) / 2) << ")\">S11 (dB)</text>\n"
      << "    <text x=\"" << num(px(12.5)) << "\" y=\"" << num(py(-33)) << "\" fill=\"#d62728\">"
      << "predicted</text>\n"
      << "    <text x=\"" << num(px(12.5)) << "\" y=\"" << num(py(-36.5)) << "\" fill=\"#1f77b4\">"
      << "oracle</text>\n"
      << "  </g>\n"
      << "  <rect x=\"" << num(px(kStartGHz)) << "\" y=\"" << num(py(kDbCeil)) << "\" width=\""
      << num(px(kStopGHz) - px(kStartGHz)) << "\" height=\"" << num(py(kDbFloor) - py(kDbCeil))
      << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << num(px(kStartGHz)) << "\" y1=\"" << num(py(kBandThresholdDb))
      << "\" x2=\"" << num(px(kStopGHz)) << "\" y2=\"" << num(py(kBandThresholdDb))
      << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n"
      << polyline(oracle, "#1f77b4") << polyline(predicted, "#d62728") << "</svg>\n";
  return svg.str();
}

std::string render_pgm(const RasterGrid& grid) {
  const int r = grid.resolution();
  std::string out = "P5\n" + std::to_string(r) + " " + std::to_string(r) + "\n255\n";
  for (const float v : grid.pixels()) {
    out.push_back(static_cast<char>(
        static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f))));
  }
  return out;
}

std::string spectrum_csv(const Spectrum& spectrum) {
  std::string out = "freq_ghz,s11_db\n";
  for (int i = 0; i < kSpectrumPoints; ++i) {
    out += fixed6(grid_frequency_ghz(i)) + "," + fixed6(spectrum.s11_db[i]) + "\n";
  }
  return out;
}

PredictResult cmd_predict(const PredictOptions& o, std::ostream& log) {
  if (o.out_prefix.empty()) throw UsageError("predict: --out is required");
  validate(o.pattern);
  validate(o.stack);
  SurrogateModel model = load_model(o.model);
  const RasterGrid grid = render(o.pattern, model.descriptor().input_resolution);
  PredictResult r;
  r.oracle = reflection_spectrum(o.stack, grid);
  r.prediction = predict(model, grid, encode_config(o.stack));

  const fs::path csv = o.out_prefix.string() + ".csv";
  const fs::path svg = o.out_prefix.string() + ".svg";
  if (o.out_prefix.has_parent_path()) fs::create_directories(o.out_prefix.parent_path());
  io::write_file_atomic(csv, prediction_csv(r));
  io::write_file_atomic(svg, spectrum_svg(r.prediction.spectrum, r.oracle));
  log << "predicted bands below -10 dB:";
  for (const auto& b : r.prediction.bands) {
    log << " [" << fixed6(b.start_ghz) << ", " << fixed6(b.end_ghz) << "]";
  }
  if (r.prediction.bands.empty()) log << " none";
  log << "\nwrote " << csv.string() << " and " << svg.string() << "\n";
  return r;
}

}  // namespace rasnet::cli
