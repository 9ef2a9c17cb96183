// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "oracles.hpp"
#include "rasnet/layers.hpp"
#include "rasnet/loss.hpp"
#include "rasnet/physics.hpp"
#include "rasnet/surrogate.hpp"
#include "tempdir.hpp"

namespace rasnet {
namespace {

using test::check_gradient;
using test::dot;
using test::random_tensor;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// --- 1 --------------------------------------------------------------------------

Outcome physics_suite() {
  const auto t0 = Clock::now();
  double lossless_dev = 0.0;
  for (const auto& s : {test::lossless_slab(6.15, 1.0, 3.2), test::lossless_slab(1.0, 1.0, 9.0),
                        test::lossless_slab(11.5, 3.2, 0.7)}) {
    for (double m : reflection_magnitudes(s, SheetFn{})) {
      lossless_dev = std::max(lossless_dev, std::abs(m - 1.0));
    }
  }

  const int design = 175;
  const auto sheet = [](double) {
    return std::optional<Complex>(Complex(kFreeSpaceImpedance, 0.0));
  };
  const double at_design =
      to_spectrum(reflection_magnitudes(test::salisbury_stack(grid_frequency_ghz(design) * 1e9),
                                        sheet))
          .s11_db[design];

  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const StackConfig stack = test::random_stack(rng);
    const PatternFeatures feat{rng.uniform(), rng.uniform(0.01, 1.0)};
    const double rs = stack.sheet_resistance_ohm_sq;
    for (double m : reflection_magnitudes(stack, [&](double f) {
           return std::optional<Complex>(sheet_impedance(feat, rs, f));
         })) {
      worst = std::max(worst, m);
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = lossless_dev <= 1e-6 && at_design == kDbFloor && worst <= 1.0 + 1e-9 && secs < 10.0;
  return {pass, fmt("lossless max ||G|-1| %.2e, Salisbury %.1f dB at %.2f GHz, max |G| over 1000 "
                    "stacks %.9f, %.2f s",
                    lossless_dev, at_design, grid_frequency_ghz(design), worst, secs)};
}

// --- 2 --------------------------------------------------------------------------

struct GradTally {
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::string worst_where;

  void add(const test::GradCheck& r, const std::string& where) {
    if (r.worst > worst) {
      worst = r.worst;
      worst_where = where;
    }
    checked += r.checked;
    skipped += r.skipped;
  }
};

void gradient_layers(std::uint64_t seed, GradTally& tally) {
  const std::string s = " seed " + std::to_string(seed);
  {
    Rng rng(seed);
    for (int stride : {1, 2}) {
      Conv2d<double> conv(3, 4, 3, stride, 1);
      conv.init(rng);
      for (auto& b : conv.bias.value.values()) b = rng.uniform(-1, 1);
      auto x = random_tensor({2, 3, 6, 5}, rng);
      const auto wts = random_tensor(conv.forward(x).shape(), rng);
      conv.zero_grad();
      const auto dx = conv.backward(wts);
      const auto loss = [&] { return dot(conv.forward(x), wts); };
      tally.add(check_gradient(x, dx, loss, rng), "conv input" + s);
      tally.add(check_gradient(conv.weight.value, conv.weight.grad, loss, rng), "conv weight" + s);
      tally.add(check_gradient(conv.bias.value, conv.bias.grad, loss, rng), "conv bias" + s);
    }
  }
  for (Mode mode : {Mode::kTrain, Mode::kInfer}) {
    for (const std::vector<int>& shape : {std::vector<int>{3, 2, 4, 3}, std::vector<int>{5, 4}}) {
      Rng rng(seed);
      BatchNorm<double> bn(shape[1]);
      for (auto& g : bn.gamma.value.values()) g = rng.uniform(0.5, 2.0);
      for (auto& b : bn.beta.value.values()) b = rng.uniform(-1, 1);
      for (auto& m : bn.running_mean.values()) m = rng.uniform(-1, 1);
      for (auto& v : bn.running_var.values()) v = rng.uniform(0.5, 2.0);
      auto x = random_tensor(shape, rng, -2.0, 3.0);
      const auto wts = random_tensor(shape, rng);
      bn.forward(x, mode);
      bn.zero_grad();
      const auto dx = bn.backward(wts);
      const auto loss = [&] { return dot(bn.forward(x, mode), wts); };
      const std::string tag = mode == Mode::kTrain ? "batchnorm train" : "batchnorm infer";
      tally.add(check_gradient(x, dx, loss, rng), tag + " input" + s);
      tally.add(check_gradient(bn.gamma.value, bn.gamma.grad, loss, rng), tag + " gamma" + s);
      tally.add(check_gradient(bn.beta.value, bn.beta.grad, loss, rng), tag + " beta" + s);
    }
  }
  {
    Rng rng(seed);
    LeakyRelu<double> act;
    auto x = random_tensor({3, 4, 5}, rng, -2.0, 2.0);
    for (auto& v : x.values()) {
      if (std::abs(v) < 0.05) v += v < 0 ? -0.05 : 0.05;
    }
    const auto wts = random_tensor(x.shape(), rng);
    act.forward(x);
    const auto dx = act.backward(wts);
    tally.add(check_gradient(x, dx, [&] { return dot(act.forward(x), wts); }, rng, 60),
              "leaky relu" + s);
  }
  {
    Rng rng(seed);
    MaxPool2d<double> pool;
    BasicTensor<double> x({2, 3, 4, 6});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.01 * static_cast<double>(i);
    rng.shuffle(x.values().begin(), x.values().end());
    const auto wts = random_tensor({2, 3, 2, 3}, rng);
    pool.forward(x);
    const auto dx = pool.backward(wts);
    tally.add(check_gradient(x, dx, [&] { return dot(pool.forward(x), wts); }, rng, 144),
              "max pool" + s);
  }
  {
    Rng rng(seed);
    Linear<double> fc(7, 5);
    fc.init(rng);
    for (auto& b : fc.bias.value.values()) b = rng.uniform(-1, 1);
    auto x = random_tensor({3, 7}, rng);
    const auto wts = random_tensor({3, 5}, rng);
    fc.forward(x);
    fc.zero_grad();
    const auto dx = fc.backward(wts);
    const auto loss = [&] { return dot(fc.forward(x), wts); };
    tally.add(check_gradient(x, dx, loss, rng), "linear input" + s);
    tally.add(check_gradient(fc.weight.value, fc.weight.grad, loss, rng), "linear weight" + s);
    tally.add(check_gradient(fc.bias.value, fc.bias.grad, loss, rng), "linear bias" + s);
  }
  {
    Rng rng(seed);
    const double delta = 0.5;
    auto pred = random_tensor({4, 201}, rng, -1.0, 2.0);
    const auto target = random_tensor({4, 201}, rng, 0.0, 1.0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double e = pred[i] - target[i];
      if (std::abs(std::abs(e) - delta) < 0.01) pred[i] += e > 0 ? 0.02 : -0.02;
    }
    const auto analytic = huber_loss(pred, target, delta).grad;
    tally.add(check_gradient(pred, analytic, [&] { return huber_loss(pred, target, delta).loss; },
                             rng, 200),
              "huber" + s);
  }
}

void gradient_network(std::uint64_t seed, GradTally& tally) {
  ArchitectureDescriptor d;
  d.input_resolution = 16;
  d.conv_channels = {2, 2, 2, 2};
  d.fc_hidden = {8, 8};
  d.output_length = 5;
  Network<double> net(d, seed);
  Rng rng(100 + seed);
  for (auto* p : net.parameters()) {
    if (p->name == "bias" || p->name == "beta") {
      for (auto& v : p->value.values()) v = rng.uniform(-0.1, 0.1);
    }
  }
  auto images = random_tensor({3, 1, 16, 16}, rng, 0.0, 1.0);
  auto configs = random_tensor({3, 14}, rng, 0.0, 1.0);
  const auto wts = random_tensor({3, 5}, rng);
  net.zero_grad();
  net.forward(images, configs, Mode::kTrain);
  const auto grads = net.backward(wts);
  const auto base = net.activation_pattern();
  const auto loss = [&] { return dot(net.forward(images, configs, Mode::kTrain), wts); };
  const auto same_piece = [&] { return net.activation_pattern() == base; };
  const auto check = [&](BasicTensor<double>& x, const BasicTensor<double>& analytic,
                         std::size_t samples, const std::string& what) {
    tally.add(check_gradient(x, analytic, loss, rng, samples, 1e-3, same_piece,
                             test::Stencil::kFivePoint),
              "network " + what + " seed " + std::to_string(seed));
  };
  check(images, grads.images, 60, "images");
  check(configs, grads.configs, 30, "configs");
  for (auto* p : net.parameters()) {
    const auto analytic = p->grad;
    check(p->value, analytic, 12, p->name);
  }
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  GradTally layers, network;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    gradient_layers(seed, layers);
    gradient_network(seed, network);
  }
  const double secs = seconds_since(t0);
  const double worst = std::max(layers.worst, network.worst);
  const bool pass = worst < 1e-3 && network.checked >= 2 * network.skipped && secs < 120.0;
  return {pass, fmt("5 seeds, layers max rel err %.2e over %zu coords, network %.2e over %zu "
                    "coords (%zu kink-crossing skipped), worst at %s, %.1f s",
                    layers.worst, layers.checked, network.worst, network.checked, network.skipped,
                    (layers.worst >= network.worst ? layers.worst_where : network.worst_where).c_str(),
                    secs)};
}

// --- 3 --------------------------------------------------------------------------

Outcome huber_identities() {
  const auto row = [](double v) { return BasicTensor<double>({1, 1}, std::vector<double>{v}); };
  bool boundary = true;
  for (double delta : {0.25, 0.5, 1.0, 3.0}) {
    const double at = huber_loss(row(delta), row(0.0), delta).loss;
    boundary = boundary && at == 0.5 * delta * delta && at == delta * delta - 0.5 * delta * delta;
  }
  bool half_mse = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto p = random_tensor({8, 201}, rng, -1.0, 2.0);
    const auto t = random_tensor({8, 201}, rng, 0.0, 1.0);
    double max_e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) max_e = std::max(max_e, std::abs(p[i] - t[i]));
    const double half = 0.5 * compute_metrics(p, t).mse;
    half_mse = half_mse && huber_loss(p, t, max_e).loss == half && huber_loss(p, t, 3.0).loss == half;
  }
  const bool default3 = TrainConfig{}.delta == 3.0;
  return {boundary && half_mse && default3,
          fmt("boundary exact %s, large-delta equals half MSE exactly %s, default delta %.1f",
              boundary ? "yes" : "no", half_mse ? "yes" : "no", TrainConfig{}.delta)};
}

// --- 4..8 share the desk-scale run ----------------------------------------------

struct DeskRun {
  test::TempDir dir{"acceptance"};
  Dataset data;
  std::optional<SurrogateModel> model;
  double train_seconds = 0.0;
  std::optional<cli::RunReport> report;

  std::filesystem::path data_dir() const { return dir / "data"; }
  std::filesystem::path model_dir() const { return dir / "model"; }
};

constexpr double kBudgetSeconds = 30 * 60;

Outcome desk_training(DeskRun& run) {
  cli::GenOptions g;
  g.n = 2000;
  g.resolution = 64;
  g.seed = 42;
  g.split = {0.9, 0.05, 0.05};
  g.out = run.data_dir();
  std::ostringstream quiet;
  const auto tg = Clock::now();
  run.data = cli::cmd_gen(g, quiet);
  std::cerr << "generated 2000 samples at 64x64 in " << seconds_since(tg) << " s\n";

  cli::TrainOptions t;
  t.data = run.data_dir();
  t.out = run.model_dir();
  t.config.epochs = 1000;
  t.config.batch_size = 32;
  t.config.learning_rate = 1e-4;
  t.config.delta = 3.0;
  t.config.seed = 42;
  t.stop_val_mse = 0.003;
  t.stop_val_cs = 0.995;
  t.time_limit_s = kBudgetSeconds;
  const auto t0 = Clock::now();
  run.model = cli::cmd_train(t, std::cerr);
  run.train_seconds = seconds_since(t0);

  const auto& h = run.model->history.epochs;
  double elapsed = 0.0, best_mse = 1e9, best_cs = 0.0;
  int reached = 0;
  for (const auto& e : h) {
    elapsed += e.seconds;
    best_mse = std::min(best_mse, e.val_mse);
    best_cs = std::max(best_cs, e.val_cs);
    if (!reached && elapsed <= kBudgetSeconds && e.val_mse <= 0.003 && e.val_cs >= 0.995) {
      reached = e.epoch;
    }
  }
  const auto& last = h.back();
  if (reached) {
    return {true, fmt("targets met at epoch %d (val_mse %.5f, val_cs %.5f), %.0f s training",
                      reached, h[reached - 1].val_mse, h[reached - 1].val_cs, run.train_seconds)};
  }
  return {false, fmt("targets not met: %zu epochs in %.0f s, best val_mse %.5f (need <= 0.003), "
                     "best val_cs %.5f (need >= 0.995), last epoch val_mse %.5f val_cs %.5f",
                     h.size(), run.train_seconds, best_mse, best_cs, last.val_mse, last.val_cs)};
}

Outcome delta_sweep() {
  test::TempDir dir("acceptance-sweep");
  cli::GenOptions g;
  g.n = 100;
  g.resolution = 16;
  g.seed = 5;
  g.split = {0.8, 0.1, 0.1};
  g.out = dir / "data";
  std::ostringstream quiet;
  cli::cmd_gen(g, quiet);

  cli::SweepOptions s;
  s.data = g.out;
  s.out = dir / "sweep";
  s.grid = cli::parse_grid("0.25:3.0:0.25");
  s.config.epochs = 200;
  const auto t0 = Clock::now();
  const cli::SweepResult r = cli::cmd_sweep_delta(s, quiet);
  const double secs = seconds_since(t0);

  bool ascending = r.rows.size() == 12;
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (i > 0) ascending = ascending && r.rows[i].delta > r.rows[i - 1].delta;
    if (r.rows[i].val_mse < r.rows[best].val_mse) best = i;
  }
  const auto csv = test::slurp(s.out / "sweep.csv");
  const bool files = std::count(csv.begin(), csv.end(), '\n') == 13 &&
                     std::filesystem::exists(s.out / "sweep.json");
  const bool selected = !r.rows.empty() && r.selected_delta == r.rows[best].delta;
  return {ascending && files && selected,
          fmt("%zu grid points ascending %s, report files %s, selected delta %.2f (argmin val_mse "
              "%.6f), 200 epochs each on 100 samples at 16x16, %.0f s",
              r.rows.size(), ascending ? "yes" : "no", files ? "written" : "missing",
              r.selected_delta, r.rows.empty() ? 0.0 : r.rows[best].val_mse, secs)};
}

void ensure_report(DeskRun& run) {
  if (run.report) return;
  cli::EvalOptions e;
  e.model = run.model_dir();
  e.data = run.data_dir();
  e.split = "test";
  e.report = run.dir / "report.json";
  e.command = {"rasnet", "eval"};
  std::ostringstream quiet;
  run.report = cli::cmd_eval(e, quiet);
}

Outcome band_agreement(DeskRun& run) {
  ensure_report(run);
  std::size_t agree = 0;
  for (const auto& s : run.report->bands) agree += s.agree;
  const double frac = run.report->band_agreement;
  return {frac >= 0.9, fmt("%zu of %zu test samples within 0.24 GHz per edge (%.1f%%, need 90%%)",
                           agree, run.report->bands.size(), 100.0 * frac)};
}

Outcome speed_report(DeskRun& run) {
  ensure_report(run);
  const auto& idx = run.data.splits.test;
  const std::size_t n = std::min<std::size_t>(50, idx.size());
  const auto t0 = Clock::now();
  for (std::size_t k = 0; k < n; ++k) {
    ConfigVector cfg;
    std::ranges::copy(run.data.config(idx[k]), cfg.begin());
    predict(*run.model, run.data.grid(idx[k]), cfg);
  }
  const double per_sample_ms = 1e3 * seconds_since(t0) / static_cast<double>(n);
  const auto& r = *run.report;
  const bool ratio_ok = std::isfinite(r.time_ratio) && r.time_ratio > 0.0 &&
                        std::abs(r.time_ratio - r.surrogate_seconds_per_sample /
                                                    r.oracle_seconds_per_sample) <=
                            1e-9 * r.time_ratio;
  return {per_sample_ms <= 50.0 && ratio_ok,
          fmt("single-sample inference %.2f ms at 64x64 (limit 50 ms); report ratio %.3f "
              "(surrogate %.3f ms, oracle %.3f ms per sample)",
              per_sample_ms, r.time_ratio, 1e3 * r.surrogate_seconds_per_sample,
              1e3 * r.oracle_seconds_per_sample)};
}

Outcome reproducibility(DeskRun& run) {
  cli::GenOptions g;
  g.n = 2000;
  g.resolution = 64;
  g.seed = 42;
  g.split = {0.9, 0.05, 0.05};
  g.out = run.dir / "data-again";
  g.threads = 3;
  std::ostringstream quiet;
  cli::cmd_gen(g, quiet);
  bool regen = true;
  for (const char* f : {"manifest.json", "images.f32", "configs.f32", "targets.f32"}) {
    regen = regen && test::slurp(run.data_dir() / f) == test::slurp(g.out / f);
  }

  SurrogateModel back = load_model(run.model_dir());
  const auto& test_idx = run.data.splits.test;
  const bool round_trip = predict_normalized(*run.model, run.data, test_idx) ==
                          predict_normalized(back, run.data, test_idx);

  TrainConfig c;
  c.epochs = 1;
  c.seed = 7;
  auto a = build(run.model->descriptor(), 7);
  auto b = build(run.model->descriptor(), 7);
  train(a, run.data, c);
  train(b, run.data, c);
  const auto& ea = a.history.epochs.at(0);
  const auto& eb = b.history.epochs.at(0);
  const bool epoch1 = ea.train_huber == eb.train_huber && ea.train_mse == eb.train_mse &&
                      ea.val_mse == eb.val_mse && ea.val_cs == eb.val_cs;
  return {regen && round_trip && epoch1,
          fmt("dataset regeneration byte-identical %s, model save/load bit-exact %s, epoch-1 "
              "losses identical %s (%.9g)",
              regen ? "yes" : "no", round_trip ? "yes" : "no", epoch1 ? "yes" : "no",
              ea.train_huber)};
}

Outcome guarded(const std::function<Outcome()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {false, std::string("error: ") + e.what()};
  }
}

}  // namespace
}  // namespace rasnet

int main() {
  using namespace rasnet;
  DeskRun run;
  bool trained = false;
  int failures = 0;
  const auto report = [&](int id, const Outcome& o) {
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " " << o.detail
              << std::endl;
    failures += !o.pass;
  };
  const auto needs_model = [&](const std::function<Outcome()>& body) {
    if (!trained) return Outcome{false, "desk-scale model unavailable"};
    return guarded(body);
  };

  report(1, guarded(physics_suite));
  report(2, guarded(gradient_suite));
  report(3, guarded(huber_identities));
  report(4, guarded([&] {
    auto o = desk_training(run);
    trained = run.model.has_value();
    return o;
  }));
  report(5, guarded(delta_sweep));
  report(6, needs_model([&] { return band_agreement(run); }));
  report(7, needs_model([&] { return speed_report(run); }));
  report(8, needs_model([&] { return reproducibility(run); }));
  std::cout << (failures ? std::to_string(failures) + " of 8 criteria failed" : "all 8 criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
