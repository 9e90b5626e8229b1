#ifndef RUL2STAGE_STAGE_HPP
#define RUL2STAGE_STAGE_HPP

#include "rul2stage/dataio.hpp"
#include "rul2stage/nn/checkpoint.hpp"
#include "rul2stage/nn/network.hpp"
#include "rul2stage/nn/trainer.hpp"
#include "rul2stage/windows.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rul2stage {

/// Settings shared by both stages: windowing, architecture, optimization.
struct StageOptions {
  int window_length = windows::kDefaultWindow;
  int window_step = windows::kDefaultStep;
  int hidden_size = 50;
  int layers_per_stack = 4;
  int n_stacks = 2;
  int dense_width = 128;
  std::uint64_t init_seed = 0;
  nn::TrainConfig train;
  nn::EpochCallback on_epoch;  // progress only; never affects results

  nn::ModelSpec model_spec(nn::Head head, int n_features) const;
  void validate() const;
};

/// A trained network plus the feature pipeline it expects.
class StageModel {
 public:
  StageModel(nn::Network<double> network, dataio::FeatureSelection selection,
             dataio::NormalizationStats stats, int window_step);

  const nn::Network<double>& network() const { return network_; }
  const dataio::FeatureSelection& selection() const { return selection_; }
  const dataio::NormalizationStats& stats() const { return stats_; }
  int window_length() const { return network_.spec().step_dim; }
  int window_step() const { return window_step_; }
  nn::Head head() const { return network_.spec().head; }

  /// Normalizes a raw cell with this model's stats and cuts its windows.
  std::vector<windows::WindowSample> windows_for(const dataio::CellHistory& cell) const;

  /// Raw network outputs for already-normalized windows.
  std::vector<double> predict(std::span<const windows::WindowSample> samples) const;

  nn::Checkpoint to_checkpoint(std::vector<std::pair<std::string, std::string>> metadata = {}) const;

 protected:
  /// Rebuilds from a checkpoint, refusing a different head.
  StageModel(const nn::Checkpoint& checkpoint, nn::Head expected);

 private:
  void check_window(const windows::WindowSample& w) const;

  nn::Network<double> network_;
  dataio::FeatureSelection selection_;
  dataio::NormalizationStats stats_;
  int window_step_ = 1;
};

/// Throws ShapeError unless both models read the same features the same way.
void require_compatible(const StageModel& a, const StageModel& b);

}  // namespace rul2stage

#endif  // RUL2STAGE_STAGE_HPP
