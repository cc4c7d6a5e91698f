// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "inrrom/errors.hpp"
#include "inrrom/io.hpp"
#include "inrrom/trainer.hpp"

namespace inrrom::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt_mu(double mu) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", mu);
  return buf;
}

unsigned thread_count() {
  const char* env = std::getenv("INRROM_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("INRROM_THREADS must be a positive integer");
  return unsigned(n);
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_run_config(path);
}

std::vector<double> snapshot_times(const FomConfig& f) {
  std::vector<double> t;
  for (std::size_t s = 0; s < f.snapshot_count(); ++s) t.push_back(double(s * f.snapshot_stride) * f.dt);
  return t;
}

std::vector<double> select_params(const std::string& set, const Checkpoint& ckpt, const Dataset& d) {
  if (set == "train") return ckpt.train_params;
  if (set == "all") return d.params;
  if (set == "test") {
    std::vector<double> out;
    for (double mu : d.params) {
      if (std::find(ckpt.train_params.begin(), ckpt.train_params.end(), mu) == ckpt.train_params.end()) {
        out.push_back(mu);
      }
    }
    if (out.empty()) throw ConfigError("dataset holds no parameters outside the training set");
    return out;
  }
  throw ConfigError("unknown parameter set \"" + set + "\" (expected train, test or all)");
}

struct Options {
  std::string config;
  std::string dataset;
  std::string checkpoint;
  std::string out;
  std::string set;
  std::string kind;
  std::string log;
  std::vector<double> params;
  std::vector<std::size_t> snapshots;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  double mu = 0.0;
  bool pi = false;
  bool no_error = false;
};

int cmd_generate(const Options& o, std::ostream& out) {
  RunConfig cfg = load_config(o.config);
  std::vector<double> params;
  if (!o.params.empty()) {
    params = o.params;
  } else if (o.set == "train") {
    params = cfg.train_params;
  } else if (o.set == "test") {
    params = cfg.test_params;
  } else if (o.set == "all") {
    params = cfg.train_params;
    params.insert(params.end(), cfg.test_params.begin(), cfg.test_params.end());
  } else {
    throw ConfigError("unknown parameter set \"" + o.set + "\" (expected train, test or all)");
  }
  Dataset d = generate_dataset(cfg.fom, params, thread_count());
  d.config_json = to_json(cfg);
  const std::string path = o.out.empty() ? cfg.dataset : o.out;
  write_dataset(d, path);
  for (std::size_t i = 0; i < d.params.size(); ++i) {
    out << "Re=" << fmt_mu(d.params[i]) << " fom_seconds=" << d.fom_wall_seconds[i] << "\n";
  }
  out << "wrote " << path << " (" << d.params.size() << " trajectories, " << d.snapshot_count()
      << " snapshots)\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig cfg = load_config(o.config);
  if (!o.kind.empty()) cfg.model.kind = parse_model_kind(o.kind);
  if (o.pi) cfg.train.physics_informed = true;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.seed) cfg.train.seed = *o.seed;
  cfg.validate();

  const Dataset d = read_dataset(o.dataset.empty() ? cfg.dataset : o.dataset);
  for (double mu : cfg.train_params) d.index_of(mu);
  const fs::path dir = o.out.empty() ? fs::path(cfg.output_dir) : fs::path(o.out);
  fs::create_directories(dir);

  const fs::path log_path = dir / "train_log.csv";
  std::ofstream log(log_path);
  if (!log) throw IoError(log_path.string() + ": cannot open for writing");
  log << "# config: " << to_json(cfg) << "\n" << epoch_log_header() << "\n";

  Checkpoint ckpt = initialize(cfg.model, cfg.train, cfg.train_params);
  const std::size_t every = cfg.train.checkpoint_every;
  auto on_epoch = [&](const EpochLog& row, const Checkpoint& c) {
    log << epoch_log_row(row) << "\n";
    if (every > 0 && row.epoch % every == 0) {
      log.flush();
      write_checkpoint(c, dir / ("checkpoint_epoch" + std::to_string(row.epoch) + ".bin"));
    }
  };
  try {
    train(ckpt, d, cfg.train.epochs, on_epoch);
  } catch (const DivergenceError&) {
    log.flush();
    write_checkpoint(ckpt, dir / "checkpoint_last_good.bin");
    throw;
  }
  log.flush();
  if (!log) throw IoError(log_path.string() + ": write failed");
  write_checkpoint(ckpt, dir / "checkpoint.bin");
  const Metrics m = evaluate(ckpt, d, ckpt.train_params);
  out << "kind=" << to_string(cfg.model.kind) << " pi=" << (cfg.train.physics_informed ? 1 : 0)
      << " epochs=" << ckpt.epoch << " avg_train_error=" << m.avg_error << " max_train_error=" << m.max_error
      << "\n";
  out << "wrote " << (dir / "checkpoint.bin").string() << "\n";
  return kOk;
}

int cmd_finetune(const Options& o, std::ostream& out, std::ostream& err) {
  if (!(o.mu > 0.0)) throw ConfigError("--mu must be a positive Reynolds number");
  const RunConfig cfg = load_config(o.config);
  const Checkpoint ckpt = read_checkpoint(o.checkpoint);
  FineTuneOptions opts = cfg.finetune;
  if (o.steps) opts.steps = *o.steps;
  if (o.seed) opts.seed = *o.seed;

  // Only the grid and the snapshot instants are taken from the dataset.
  GridSpec grid = cfg.fom.grid;
  std::vector<double> times = snapshot_times(cfg.fom);
  if (!o.dataset.empty()) {
    const Dataset d = read_dataset(o.dataset);
    grid = d.grid;
    times = d.times;
  }
  const FineTuneResult r = finetune(ckpt, o.mu, grid, times, opts);
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
  if (!o.log.empty()) {
    std::string csv = "step,residual,ic,bc,total\n";
    char buf[256];
    for (const auto& row : r.log) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", row.step, row.residual, row.ic, row.bc,
                    row.total);
      csv += buf;
    }
    write_text(o.log, csv);
  }
  const std::string path = o.out.empty() ? "finetuned.bin" : o.out;
  write_checkpoint(r.checkpoint, path);
  out << "fine-tuned Re=" << fmt_mu(o.mu) << " steps=" << opts.steps;
  if (!r.log.empty()) out << " residual_loss " << r.log.front().residual << " -> " << r.log.back().residual;
  out << "\nwrote " << path << "\n";
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  Checkpoint ckpt = read_checkpoint(o.checkpoint);
  const Dataset d = read_dataset(o.dataset);
  const std::vector<double> params = o.params.empty() ? select_params(o.set, ckpt, d) : o.params;
  const Metrics m = evaluate(ckpt, d, params);
  const std::string csv = metrics_csv(m, "checkpoint=" + o.checkpoint + " dataset=" + o.dataset);
  if (o.out.empty()) {
    out << csv;
  } else {
    write_text(o.out, csv);
    out << "avg_error=" << m.avg_error << " max_error=" << m.max_error << " min_speedup=" << m.min_speedup
        << " max_speedup=" << m.max_speedup << "\nwrote " << o.out << "\n";
  }
  return kOk;
}

int cmd_export(const Options& o, std::ostream& out) {
  Checkpoint ckpt = read_checkpoint(o.checkpoint);
  const Dataset d = read_dataset(o.dataset);
  const std::size_t p = d.index_of(o.mu);
  const std::size_t snaps = d.snapshot_count(), nodes = d.grid.nodes(), nc = d.components.size();
  std::vector<std::size_t> which = o.snapshots;
  if (which.empty()) which = {0, snaps - 1};
  for (auto s : which) {
    if (s >= snaps) throw ConfigError("snapshot " + std::to_string(s) + " out of range");
  }
  const fs::path dir = o.out.empty() ? fs::path("export") : fs::path(o.out);
  fs::create_directories(dir);

  const auto truth = d.trajectory(p);
  const std::vector<double> pred = ckpt.model.predict(o.mu, d.times, d.grid);
  std::size_t images = 0;
  for (auto s : which) {
    const std::string stem = "re" + fmt_mu(o.mu) + "_s" + std::to_string(s);
    std::vector<double> error(nodes, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
      const std::size_t base = (s * nc + c) * nodes;
      std::span<const double> fom(truth.data() + base, nodes);
      std::span<const double> rom(pred.data() + base, nodes);
      write_heatmap(fom, d.grid.nx, d.grid.ny, dir / (stem + "_fom_" + d.components[c] + ".ppm"), o.mu, d.times[s]);
      write_heatmap(rom, d.grid.nx, d.grid.ny, dir / (stem + "_rom_" + d.components[c] + ".ppm"), o.mu, d.times[s]);
      images += 2;
      for (std::size_t i = 0; i < nodes; ++i) error[i] += (fom[i] - rom[i]) * (fom[i] - rom[i]);
    }
    if (!o.no_error) {
      for (auto& e : error) e = std::sqrt(e);
      write_heatmap(error, d.grid.nx, d.grid.ny, dir / (stem + "_error.ppm"), o.mu, d.times[s]);
      ++images;
    }
  }
  out << "wrote " << images << " images to " << dir.string() << "\n";
  return kOk;
}

void report(std::ostream& err, const char* kind, const std::string& what) {
  std::string line = what;
  std::replace(line.begin(), line.end(), '\n', ' ');
  err << "error: kind=" << kind << " reason=" << line << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-dynamics reduced-order models for the 2D Burgers equation", "inrrom"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "Solve the full-order model and write a dataset");
  gen->add_option("-c,--config", o.config, "Run configuration (JSON)");
  gen->add_option("-o,--out", o.out, "Dataset path (defaults to the config's dataset)");
  gen->add_option("--set", o.set, "Parameter set: train, test or all");
  gen->add_option("--params", o.params, "Explicit Reynolds numbers")->delimiter(',');

  auto* tr = app.add_subcommand("train", "Train a reduced model");
  tr->add_option("-c,--config", o.config, "Run configuration (JSON)");
  tr->add_option("-d,--dataset", o.dataset, "Dataset path");
  tr->add_option("-o,--out", o.out, "Output directory");
  tr->add_option("--kind", o.kind, "NODE, PNODE or HyperPNODE");
  tr->add_flag("--pi", o.pi, "Add the physics-informed loss");
  tr->add_option("--epochs", o.epochs, "Number of epochs");
  tr->add_option("--seed", o.seed, "Random seed");

  auto* ft = app.add_subcommand("finetune", "Physics-only adaptation at an unseen Reynolds number");
  ft->add_option("-c,--config", o.config, "Run configuration (JSON) for fine-tune options");
  ft->add_option("-k,--checkpoint", o.checkpoint, "Checkpoint to adapt")->required();
  ft->add_option("-d,--dataset", o.dataset, "Dataset supplying the grid and snapshot times");
  ft->add_option("--mu", o.mu, "Target Reynolds number")->required();
  ft->add_option("--steps", o.steps, "Number of optimizer steps");
  ft->add_option("--seed", o.seed, "Collocation subsample seed");
  ft->add_option("--log", o.log, "Per-step loss CSV");
  ft->add_option("-o,--out", o.out, "Output checkpoint");

  auto* ev = app.add_subcommand("evaluate", "Relative errors and speedups against a dataset");
  ev->add_option("-k,--checkpoint", o.checkpoint, "Checkpoint")->required();
  ev->add_option("-d,--dataset", o.dataset, "Dataset")->required();
  ev->add_option("--set", o.set, "Parameter set: train, test or all");
  ev->add_option("--params", o.params, "Explicit Reynolds numbers")->delimiter(',');
  ev->add_option("-o,--out", o.out, "Metrics CSV (stdout when omitted)");

  auto* ex = app.add_subcommand("export", "Heatmaps of states and point-wise errors");
  ex->add_option("-k,--checkpoint", o.checkpoint, "Checkpoint")->required();
  ex->add_option("-d,--dataset", o.dataset, "Dataset")->required();
  ex->add_option("--mu", o.mu, "Reynolds number")->required();
  ex->add_option("--snapshots", o.snapshots, "Snapshot indices")->delimiter(',');
  ex->add_flag("--no-error", o.no_error, "Skip the error maps");
  ex->add_option("-o,--out", o.out, "Output directory");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    report(err, "config", e.what());
    return kConfig;
  }
  if (o.set.empty()) o.set = gen->parsed() ? "all" : "train";

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (tr->parsed()) return cmd_train(o, out);
    if (ft->parsed()) return cmd_finetune(o, out, err);
    if (ev->parsed()) return cmd_evaluate(o, out);
    if (ex->parsed()) return cmd_export(o, out);
  } catch (const ConfigError& e) {
    report(err, "config", e.what());
    return kConfig;
  } catch (const SolverError& e) {
    report(err, "solver", e.what());
    return kSolver;
  } catch (const DivergenceError& e) {
    report(err, "divergence", std::string(e.what()) + " at epoch " + std::to_string(e.epoch()));
    return kDivergence;
  } catch (const IoError& e) {
    report(err, "io", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    report(err, "io", e.what());
    return kIo;
  } catch (const ContractError& e) {
    report(err, "config", e.what());
    return kConfig;
  } catch (const DomainError& e) {
    report(err, "config", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    report(err, "internal", e.what());
    return kFailure;
  }
  return kFailure;
}

}  // namespace inrrom::cli
