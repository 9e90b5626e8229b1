#ifndef RUL2STAGE_PIPELINE_HPP
#define RUL2STAGE_PIPELINE_HPP

#include "rul2stage/config.hpp"
#include "rul2stage/dataio.hpp"
#include "rul2stage/eval.hpp"
#include "rul2stage/fpc.hpp"
#include "rul2stage/rulpred.hpp"
#include "rul2stage/stage.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace rul2stage::pipeline {

/// Everything a run needs. Defaults are the paper's setup; see
/// documented_keys() for the config file spelling of each field.
struct RunConfig {
  std::filesystem::path data;       // training pool, or pool to split when test_data is empty
  std::filesystem::path test_data;  // optional explicit test set
  int n_train = 100;
  int n_test = 24;
  int features = 4;
  int window = windows::kDefaultWindow;
  int step = windows::kDefaultStep;
  double p = windows::kDefaultLabelFraction;
  int trigger = fpc::kDefaultTrigger;
  std::uint64_t seed = 0;

  int batch_size = 8;
  int max_epochs = 100;
  int patience = 20;
  double val_fraction = 0.1;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  double clip_norm = 0.0;

  int hidden_size = 50;
  int layers_per_stack = 4;
  int stacks = 2;
  int dense_width = 128;

  double mape_floor = eval::kMapeFloor;
  std::vector<int> ablation = {1, 2, 3, 4, 7};
  std::filesystem::path out = "rul2stage-out";

  dataio::FeatureSelection selection() const { return dataio::FeatureSelection::first(features); }

  /// Stage options with seeds drawn from an independent stream per stage.
  StageOptions stage_options(int stage) const;

  /// Numeric ranges only; never touches the filesystem.
  void validate() const;
  /// validate() plus existence of the data paths.
  void validate_with_data() const;
};

std::vector<std::string_view> documented_keys();

/// Relative paths in the file resolve against `base`.
RunConfig run_config_from(const config::KeyValues& kv, const std::filesystem::path& base);

/// Mixes a run seed with a stream index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct DataSplit {
  std::vector<dataio::CellHistory> train;
  std::vector<dataio::CellHistory> test;
};

/// Loads the configured data and applies the train/test split. Throws
/// DataError for duplicate cell ids, an empty set, or too few cells.
DataSplit load_data(const RunConfig& config);

using ProgressFn = std::function<void(std::string_view stage, const nn::EpochRecord& epoch)>;

struct TwoStage {
  fpc::HsTraining hs;
  rul::RulTraining rul;
  std::vector<fpc::FpcDecision> train_decisions;  // every training cell, sorted by cell_id
  std::vector<std::string> fit_cells;
  std::vector<std::string> validation_cells;
};

/// Normalization on the pool, cell-level validation split, stage 1, FPC on
/// every pool cell, stage 2.
TwoStage train_two_stage(const std::vector<dataio::CellHistory>& train_cells, const RunConfig& config,
                         const ProgressFn& progress = {});

std::vector<std::pair<std::string, std::string>> checkpoint_metadata(const RunConfig& config,
                                                                     std::string_view stage);

}  // namespace rul2stage::pipeline

#endif  // RUL2STAGE_PIPELINE_HPP
