#include <ostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "rasnet/error.hpp"
#include "rasnet/io.hpp"

namespace rasnet::cli {

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Metasurface absorber dataset generation and CNN surrogate training"};
  app.require_subcommand(1);

  std::vector<std::string> command(argv, argv + argc);

  // gen
  GenOptions gen;
  std::string gen_split = "0.9,0.05,0.05";
  auto* g = app.add_subcommand("gen", "generate a seeded synthetic dataset");
  g->add_option("--n", gen.n, "sample count")->capture_default_str();
  g->add_option("--res", gen.resolution, "image resolution")->capture_default_str();
  g->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  g->add_option("--split", gen_split, "train,val,test fractions")->capture_default_str();
  g->add_option("--threads", gen.threads, "worker threads (0 = RASNET_THREADS)");
  g->add_option("--out", gen.out, "output directory")->required();

  // train
  TrainOptions tr;
  double stop_mse = -1.0, stop_cs = -1.0;
  auto* t = app.add_subcommand("train", "train the surrogate on a dataset");
  t->add_option("--data", tr.data, "dataset directory")->required();
  t->add_option("--epochs", tr.config.epochs)->capture_default_str();
  t->add_option("--delta", tr.config.delta, "Huber threshold")->capture_default_str();
  t->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  t->add_option("--beta1", tr.config.beta1)->capture_default_str();
  t->add_option("--beta2", tr.config.beta2)->capture_default_str();
  t->add_option("--batch", tr.config.batch_size)->capture_default_str();
  t->add_option("--seed", tr.config.seed)->capture_default_str();
  t->add_flag("--deterministic", tr.config.deterministic, "bit-reproducible kernels (default)");
  t->add_option("--stop-val-mse", stop_mse, "stop once validation MSE is at or below this");
  t->add_option("--stop-val-cs", stop_cs, "stop once validation CS is at or above this");
  t->add_option("--time-limit", tr.time_limit_s, "wall-clock budget in seconds");
  t->add_option("--out", tr.out, "model directory")->required();

  // sweep-delta
  SweepOptions sw;
  sw.config.epochs = 200;
  std::string sweep_grid = "0.25:3.0:0.25";
  auto* s = app.add_subcommand("sweep-delta", "train one model per Huber delta");
  s->add_option("--data", sw.data)->required();
  s->add_option("--grid", sweep_grid, "start:stop:step")->capture_default_str();
  s->add_option("--epochs", sw.config.epochs)->capture_default_str();
  s->add_option("--lr", sw.config.learning_rate)->capture_default_str();
  s->add_option("--batch", sw.config.batch_size)->capture_default_str();
  s->add_option("--seed", sw.config.seed)->capture_default_str();
  s->add_option("--threads", sw.threads, "parallel runs (0 = RASNET_THREADS)");
  s->add_option("--out", sw.out)->required();

  // eval
  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "evaluate a model on a dataset split");
  e->add_option("--model", ev.model)->required();
  e->add_option("--data", ev.data)->required();
  e->add_option("--split", ev.split, "train, val, test or all")->capture_default_str();
  e->add_option("--report", ev.report, "JSON report path")->required();

  // predict
  PredictOptions pr;
  std::string pr_class, pr_params, pr_stack;
  auto* p = app.add_subcommand("predict", "predict one spectrum and plot it against the oracle");
  p->add_option("--model", pr.model)->required();
  p->add_option("--class", pr_class, "pattern class name or id")->required();
  p->add_option("--params", pr_params, "comma-separated shape parameters in [0,1]")->required();
  p->add_option("--stack-json", pr_stack, "stack JSON or path to a JSON file")->required();
  p->add_option("--out", pr.out_prefix, "output prefix")->required();

  // render
  std::string rd_class, rd_params;
  int rd_res = 64;
  std::string rd_out;
  auto* r = app.add_subcommand("render", "rasterize a pattern to a PGM image");
  r->add_option("--class", rd_class)->required();
  r->add_option("--params", rd_params)->required();
  r->add_option("--res", rd_res)->capture_default_str();
  r->add_option("--out", rd_out, "PGM path")->required();

  // spectrum
  std::string sp_class, sp_params, sp_stack, sp_out;
  int sp_res = 64;
  auto* o = app.add_subcommand("spectrum", "write the oracle reflection spectrum as CSV");
  o->add_option("--class", sp_class)->required();
  o->add_option("--params", sp_params)->required();
  o->add_option("--stack-json", sp_stack)->required();
  o->add_option("--res", sp_res)->capture_default_str();
  o->add_option("--out", sp_out, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& ex) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsage;
  }

  try {
    std::string echo;
    for (const auto& a : command) echo += (echo.empty() ? "" : " ") + a;
    out << "command: " << echo << "\n";

    if (*g) {
      gen.split = parse_split(gen_split);
      cmd_gen(gen, out);
    } else if (*t) {
      if (stop_mse >= 0.0) tr.stop_val_mse = stop_mse;
      if (stop_cs >= 0.0) tr.stop_val_cs = stop_cs;
      cmd_train(tr, out);
    } else if (*s) {
      sw.grid = parse_grid(sweep_grid);
      cmd_sweep_delta(sw, out);
    } else if (*e) {
      ev.command = command;
      cmd_eval(ev, out);
    } else if (*p) {
      pr.pattern = parse_pattern(pr_class, pr_params);
      pr.stack = parse_stack(pr_stack);
      cmd_predict(pr, out);
    } else if (*r) {
      const RasterGrid grid = render(parse_pattern(rd_class, rd_params), rd_res);
      io::write_file_atomic(rd_out, render_pgm(grid));
      out << "fill factor " << grid.fill_factor() << "; wrote " << rd_out << "\n";
    } else if (*o) {
      const StackConfig stack = parse_stack(sp_stack);
      const RasterGrid grid = render(parse_pattern(sp_class, sp_params), sp_res);
      io::write_file_atomic(sp_out, spectrum_csv(reflection_spectrum(stack, grid)));
      out << "wrote " << sp_out << "\n";
    }
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    switch (ex.kind()) {
      case ErrorKind::kUsage: return kUsage;
      case ErrorKind::kData: return kData;
      case ErrorKind::kNumeric: return kNumeric;
    }
    return kData;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kData;
  }
  return kOk;
}

}  // namespace rasnet::cli
