#include "rul2stage/commands.hpp"

#include "rul2stage/error.hpp"
#include "rul2stage/report.hpp"
#include "rul2stage/synthgen.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <set>
#include <sstream>

namespace rul2stage::cli {

namespace fs = std::filesystem;
using dataio::format_double;

namespace {

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory " + dir.string() + ": " + ec.message());
}

pipeline::ProgressFn progress_printer(const CommonOptions& options, std::ostream& log) {
  if (options.quiet) return {};
  return [&log](std::string_view stage, const nn::EpochRecord& e) {
    log << stage << " epoch " << e.epoch << " train " << e.train_loss << " val " << e.validation_loss
        << (e.improved ? " *" : "") << '\n';
  };
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
  return s;
}

std::vector<std::string> ids(const std::vector<dataio::CellHistory>& cells) {
  std::vector<std::string> out;
  for (const auto& c : cells) out.push_back(c.cell_id);
  return out;
}

void write_normalization(const dataio::NormalizationStats& stats, const fs::path& file) {
  std::ostringstream s;
  s << "channel,mean,std\n";
  for (const auto& c : stats.channels) {
    s << dataio::channel_name(c.channel) << ',' << format_double(c.mean) << ',' << format_double(c.std) << '\n';
  }
  report::write_text(file, s.str());
}

void save_training(const pipeline::TwoStage& run, const pipeline::RunConfig& config,
                   const std::vector<dataio::CellHistory>& test, const fs::path& dir) {
  nn::save_checkpoint(run.hs.model.to_checkpoint(pipeline::checkpoint_metadata(config, "hs")), dir / "hs.ckpt");
  nn::save_checkpoint(run.rul.model.to_checkpoint(pipeline::checkpoint_metadata(config, "rul")), dir / "rul.ckpt");
  report::write_history_csv(run.hs.result.history, dir / "hs_history.csv");
  report::write_history_csv(run.rul.result.history, dir / "rul_history.csv");
  report::write_fpc_csv(run.train_decisions, dir / "fpc_train.csv");
  write_normalization(run.hs.model.stats(), dir / "normalization.csv");

  std::ostringstream s;
  s << "fit_cells = " << join(run.fit_cells) << '\n';
  s << "validation_cells = " << join(run.validation_cells) << '\n';
  s << "test_cells = " << join(ids(test)) << '\n';
  s << "hs.train_windows = " << run.hs.train_samples << '\n';
  s << "hs.validation_windows = " << run.hs.validation_samples << '\n';
  s << "hs.best_epoch = " << run.hs.result.best_epoch << '\n';
  s << "hs.best_validation_loss = " << format_double(run.hs.result.best_validation_loss) << '\n';
  s << "rul.train_windows = " << run.rul.train_samples << '\n';
  s << "rul.validation_windows = " << run.rul.validation_samples << '\n';
  s << "rul.best_epoch = " << run.rul.result.best_epoch << '\n';
  s << "rul.best_validation_loss = " << format_double(run.rul.result.best_validation_loss) << '\n';
  s << "rul.untriggered_cells = " << join(run.rul.untriggered_cells) << '\n';
  report::write_text(dir / "train_summary.txt", s.str());
}

void save_evaluation(const eval::FleetEvaluation& ev, const fs::path& dir) {
  report::write_metrics_text(ev.report, dir / "metrics.txt");
  report::write_metrics_csv(ev.report, dir / "metrics.csv");
  report::write_fpc_csv(ev.decisions, dir / "fpc_test.csv");
  make_dir(dir / "curves");
  make_dir(dir / "plots");
  make_dir(dir / "traces");
  for (const auto& d : ev.decisions) {
    report::write_trace_csv(d, dir / "traces" / (d.cell_id + ".csv"));
    rul::RulCurve curve{d.cell_id, 0, d.eol, {}};
    for (const auto& c : ev.curves) {
      if (c.cell_id == d.cell_id) curve = c;
    }
    report::write_curve_csv(curve, dir / "curves" / (d.cell_id + ".csv"));
    report::write_curve_svg(curve, dir / "plots" / (d.cell_id + ".svg"));
  }
}

void log_aggregate(const eval::MetricsReport& r, std::ostream& log) {
  const auto& a = r.aggregate;
  log << "cells " << r.cells.size() << " triggered " << a.n_cells << " mse " << format_double(a.mse) << " mae "
      << format_double(a.mae) << " mape " << (a.mape ? format_double(*a.mape) : "none") << '\n';
}

}  // namespace

pipeline::RunConfig resolve_run_config(const CommonOptions& options) {
  pipeline::RunConfig c;
  if (options.config) {
    const auto kv = config::KeyValues::load(*options.config);
    c = pipeline::run_config_from(kv, options.config->parent_path());
  }
  if (options.seed) c.seed = *options.seed;
  if (options.out) c.out = *options.out;
  if (options.features) c.features = *options.features;
  c.validate();
  return c;
}

OutputLock::OutputLock(const fs::path& dir) : file_(dir / ".rul2stage.lock") {
  make_dir(dir);
  const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw ConfigError("output directory " + dir.string() + " is locked by another run (remove " +
                        file_.string() + " if stale)");
    }
    throw ConfigError("cannot create lock " + file_.string() + ": " + std::strerror(errno));
  }
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

void cmd_generate(const CommonOptions& options, std::ostream& log) {
  synth::FleetSpec spec;
  if (options.config) spec = config::fleet_spec_from(config::KeyValues::load(*options.config));
  if (options.seed) spec.master_seed = *options.seed;
  spec.validate();
  const fs::path out = options.out.value_or("fleet");
  OutputLock lock(out);
  const auto manifest = dataio::save_fleet(synth::generate_fleet(spec), out);
  if (!options.quiet) log << "wrote " << spec.n_cells << " cells to " << manifest.string() << '\n';
}

void cmd_train(const CommonOptions& options, std::ostream& log) {
  const auto config = resolve_run_config(options);
  config.validate_with_data();
  OutputLock lock(config.out);
  const auto data = pipeline::load_data(config);
  if (!options.quiet) {
    log << "training on " << data.train.size() << " cells, " << config.features << " features\n";
  }
  const auto run = pipeline::train_two_stage(data.train, config, progress_printer(options, log));
  save_training(run, config, data.test, config.out);
  if (!options.quiet) {
    log << "stage 1 best epoch " << run.hs.result.best_epoch << ", stage 2 best epoch " << run.rul.result.best_epoch
        << "; checkpoints in " << config.out.string() << '\n';
    if (!run.rul.untriggered_cells.empty()) {
      log << "untriggered training cells: " << join(run.rul.untriggered_cells) << '\n';
    }
  }
}

void cmd_evaluate(const CommonOptions& options, const std::optional<fs::path>& checkpoints, std::ostream& log) {
  const auto config = resolve_run_config(options);
  config.validate_with_data();
  const fs::path ckpt_dir = checkpoints.value_or(config.out);
  const fpc::HsModel hs(nn::load_checkpoint(ckpt_dir / "hs.ckpt"));
  const rul::RulModel rul(nn::load_checkpoint(ckpt_dir / "rul.ckpt"));
  require_compatible(hs, rul);
  if (options.features && *options.features != static_cast<int>(hs.selection().size())) {
    throw ShapeError("--features " + std::to_string(*options.features) + " but the checkpoints read " +
                     std::to_string(hs.selection().size()) + " features");
  }
  OutputLock lock(config.out);
  const auto data = pipeline::load_data(config);
  if (data.test.empty()) throw DataError("the test set is empty");
  const auto ev = eval::evaluate_fleet(rul, hs, data.test, config.trigger, config.mape_floor);
  save_evaluation(ev, config.out);
  if (!options.quiet) {
    log_aggregate(ev.report, log);
    if (!ev.report.untriggered.empty()) log << "untriggered test cells: " << join(ev.report.untriggered) << '\n';
  }
}

void cmd_ablate(const CommonOptions& options, const std::optional<std::vector<int>>& counts, std::ostream& log) {
  auto config = resolve_run_config(options);
  if (counts) config.ablation = *counts;
  config.validate_with_data();
  OutputLock lock(config.out);
  const auto data = pipeline::load_data(config);
  if (data.test.empty()) throw DataError("the test set is empty");

  std::ostringstream table;
  table << "features,cells,triggered,mse,mae,mape\n";
  for (const int n : config.ablation) {
    auto c = config;
    c.features = n;
    c.out = config.out / ("features_" + std::to_string(n));
    make_dir(c.out);
    if (!options.quiet) log << "ablation: " << n << " feature(s)\n";
    const auto run = pipeline::train_two_stage(data.train, c, progress_printer(options, log));
    save_training(run, c, data.test, c.out);
    const auto ev = eval::evaluate_fleet(run.rul.model, run.hs.model, data.test, c.trigger, c.mape_floor);
    save_evaluation(ev, c.out);
    const auto& a = ev.report.aggregate;
    table << n << ',' << ev.report.cells.size() << ',' << a.n_cells << ',' << format_double(a.mse) << ','
          << format_double(a.mae) << ',' << (a.mape ? format_double(*a.mape) : "") << '\n';
    if (!options.quiet) log_aggregate(ev.report, log);
  }
  report::write_text(config.out / "ablation.csv", table.str());
  if (!options.quiet) log << table.str();
}

void cmd_inspect(const fs::path& checkpoint, std::ostream& out) {
  const auto ckpt = nn::load_checkpoint(checkpoint);
  out << "file = " << checkpoint.string() << '\n';
  out << "head = " << nn::head_name(ckpt.spec.head) << '\n';
  out << "architecture = " << nn::describe(ckpt.spec) << '\n';
  out << "window_length = " << ckpt.window_length() << '\n';
  out << "window_step = " << ckpt.window_step << '\n';
  out << "features = " << join(ckpt.selection.names()) << '\n';
  for (const auto& c : ckpt.stats.channels) {
    out << "stats." << dataio::channel_name(c.channel) << " = " << format_double(c.mean) << ','
        << format_double(c.std) << '\n';
  }
  for (const auto& [k, v] : ckpt.metadata) out << "meta." << k << " = " << v << '\n';
  out << "parameters = " << ckpt.parameters.size() << '\n';
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitOther;
}

int run_guarded(const std::function<void()>& command, std::ostream& err) {
  try {
    command();
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace rul2stage::cli
