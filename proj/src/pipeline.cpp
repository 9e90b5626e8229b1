#include "rul2stage/pipeline.hpp"

#include "rul2stage/error.hpp"

#include <algorithm>
#include <set>

namespace rul2stage::pipeline {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_unique(const std::vector<dataio::CellHistory>& cells, const std::string& what) {
  std::set<std::string> seen;
  for (const auto& c : cells) {
    if (!seen.insert(c.cell_id).second) throw DataError(what + ": duplicate cell id '" + c.cell_id + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  if (value.empty()) return {};
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

StageOptions RunConfig::stage_options(int stage) const {
  StageOptions o;
  o.window_length = window;
  o.window_step = step;
  o.hidden_size = hidden_size;
  o.layers_per_stack = layers_per_stack;
  o.n_stacks = stacks;
  o.dense_width = dense_width;
  o.init_seed = derive_seed(seed, 10 * static_cast<std::uint64_t>(stage) + 1);
  o.train.batch_size = batch_size;
  o.train.max_epochs = max_epochs;
  o.train.patience = patience;
  o.train.validation_fraction = val_fraction;
  o.train.seed = derive_seed(seed, 10 * static_cast<std::uint64_t>(stage) + 2);
  o.train.clip_norm = clip_norm;
  o.train.adam = {lr, beta1, beta2, epsilon};
  return o;
}

void RunConfig::validate() const {
  require(features >= 1 && features <= dataio::kNumChannels,
          "features must lie in 1..7, got " + std::to_string(features));
  require(window >= 2, "window must be >= 2");
  require(step >= 1, "step must be >= 1");
  require(p > 0.0 && p < 0.5, "p must lie in (0, 0.5)");
  require(trigger >= 2, "trigger must be >= 2");
  require(n_train >= 2, "n_train must be >= 2 (at least one fit and one validation cell)");
  require(n_test >= 0, "n_test must be >= 0");
  require(mape_floor > 0.0, "mape_floor must be > 0");
  require(!ablation.empty(), "ablation list must not be empty");
  std::set<int> seen;
  for (const int n : ablation) {
    require(n >= 1 && n <= dataio::kNumChannels, "ablation counts must lie in 1..7, got " + std::to_string(n));
    require(seen.insert(n).second, "duplicate ablation count " + std::to_string(n));
  }
  stage_options(1).validate();
}

void RunConfig::validate_with_data() const {
  validate();
  require(!data.empty(), "no training data configured (key 'data')");
  require(std::filesystem::exists(data), "data path does not exist: " + data.string());
  require(test_data.empty() || std::filesystem::exists(test_data),
          "test_data path does not exist: " + test_data.string());
}

std::vector<std::string_view> documented_keys() {
  return {"data",       "test_data",  "n_train",   "n_test",           "features", "window",
          "step",       "p",          "trigger",   "seed",             "batch_size", "max_epochs",
          "patience",   "val_fraction", "lr",      "beta1",            "beta2",    "epsilon",
          "clip_norm",  "hidden_size", "layers_per_stack", "stacks",   "dense_width", "mape_floor",
          "ablation",   "out"};
}

RunConfig run_config_from(const config::KeyValues& kv, const std::filesystem::path& base) {
  kv.require_known(documented_keys());
  RunConfig c;
  c.data = resolve(base, kv.get_string("data", ""));
  c.test_data = resolve(base, kv.get_string("test_data", ""));
  c.n_train = kv.get_int("n_train", c.n_train);
  c.n_test = kv.get_int("n_test", c.n_test);
  c.features = kv.get_int("features", c.features);
  c.window = kv.get_int("window", c.window);
  c.step = kv.get_int("step", c.step);
  c.p = kv.get_double("p", c.p);
  c.trigger = kv.get_int("trigger", c.trigger);
  c.seed = kv.get_u64("seed", c.seed);
  c.batch_size = kv.get_int("batch_size", c.batch_size);
  c.max_epochs = kv.get_int("max_epochs", c.max_epochs);
  c.patience = kv.get_int("patience", c.patience);
  c.val_fraction = kv.get_double("val_fraction", c.val_fraction);
  c.lr = kv.get_double("lr", c.lr);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.epsilon = kv.get_double("epsilon", c.epsilon);
  c.clip_norm = kv.get_double("clip_norm", c.clip_norm);
  c.hidden_size = kv.get_int("hidden_size", c.hidden_size);
  c.layers_per_stack = kv.get_int("layers_per_stack", c.layers_per_stack);
  c.stacks = kv.get_int("stacks", c.stacks);
  c.dense_width = kv.get_int("dense_width", c.dense_width);
  c.mape_floor = kv.get_double("mape_floor", c.mape_floor);
  c.ablation = kv.get_int_list("ablation", c.ablation);
  if (kv.has("out")) c.out = resolve(base, kv.get_string("out", ""));
  return c;
}

DataSplit load_data(const RunConfig& config) {
  auto pool = dataio::load_cells(config.data);
  check_unique(pool, config.data.string());
  DataSplit split;
  if (!config.test_data.empty()) {
    split.train = std::move(pool);
    split.test = dataio::load_cells(config.test_data);
    check_unique(split.test, config.test_data.string());
    std::set<std::string> train_ids;
    for (const auto& c : split.train) train_ids.insert(c.cell_id);
    for (const auto& c : split.test) {
      if (train_ids.count(c.cell_id)) throw DataError("cell '" + c.cell_id + "' is in both training and test data");
    }
  } else {
    const auto need = static_cast<std::size_t>(config.n_train + config.n_test);
    if (pool.size() < need) {
      throw DataError(config.data.string() + " holds " + std::to_string(pool.size()) + " cells; n_train + n_test = " +
                      std::to_string(need));
    }
    auto s = dataio::split_train_test(pool, config.n_train, config.seed);
    split.train = std::move(s.train);
    s.test.resize(static_cast<std::size_t>(config.n_test));
    split.test = std::move(s.test);
  }
  if (split.train.size() < 2) throw DataError("training needs at least two cells");
  return split;
}

TwoStage train_two_stage(const std::vector<dataio::CellHistory>& train_cells, const RunConfig& config,
                         const ProgressFn& progress) {
  config.validate();
  if (train_cells.size() < 2) throw DataError("training needs at least two cells");
  check_unique(train_cells, "training data");
  const auto selection = config.selection();
  const auto stats = dataio::compute_normalization(train_cells, selection);

  const auto mask = nn::validation_mask(train_cells.size(), config.val_fraction, derive_seed(config.seed, 0));
  std::vector<dataio::CellHistory> fit, val;
  std::vector<std::string> fit_ids, val_ids;
  for (std::size_t i = 0; i < train_cells.size(); ++i) {
    (mask[i] ? val : fit).push_back(train_cells[i]);
    (mask[i] ? val_ids : fit_ids).push_back(train_cells[i].cell_id);
  }

  const auto hook = [&](std::string_view stage) -> nn::EpochCallback {
    if (!progress) return {};
    return [&progress, stage](const nn::EpochRecord& e) { progress(stage, e); };
  };

  fpc::HsTrainOptions hs_options{config.stage_options(1), config.p};
  hs_options.stage.on_epoch = hook("hs");
  auto hs = fpc::train_hs(fit, val, selection, stats, hs_options);

  std::vector<fpc::FpcDecision> decisions;
  for (const auto& cell : train_cells) decisions.push_back(fpc::decide_fpc(hs.model, cell, config.trigger));
  std::sort(decisions.begin(), decisions.end(), [](const auto& a, const auto& b) { return a.cell_id < b.cell_id; });

  auto rul_options = config.stage_options(2);
  rul_options.on_epoch = hook("rul");
  auto rul = rul::train_rul(fit, val, decisions, selection, stats, rul_options);
  return {std::move(hs), std::move(rul), std::move(decisions), std::move(fit_ids), std::move(val_ids)};
}

std::vector<std::pair<std::string, std::string>> checkpoint_metadata(const RunConfig& config,
                                                                     std::string_view stage) {
  return {{"stage", std::string(stage)},
          {"seed", std::to_string(config.seed)},
          {"features", std::to_string(config.features)},
          {"label_fraction", dataio::format_double(config.p)},
          {"trigger", std::to_string(config.trigger)}};
}

}  // namespace rul2stage::pipeline
