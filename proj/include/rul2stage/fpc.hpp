#ifndef RUL2STAGE_FPC_HPP
#define RUL2STAGE_FPC_HPP

#include "rul2stage/dataio.hpp"
#include "rul2stage/stage.hpp"
#include "rul2stage/windows.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rul2stage::fpc {

inline constexpr int kDefaultTrigger = 5;
inline constexpr double kDecisionThreshold = 0.5;

/// Health-state classifier: logistic head, outputs P(unhealthy).
class HsModel : public StageModel {
 public:
  using StageModel::StageModel;
  explicit HsModel(const nn::Checkpoint& checkpoint) : StageModel(checkpoint, nn::Head::HealthState) {}
};

struct HsTrainOptions {
  StageOptions stage;
  double label_fraction = windows::kDefaultLabelFraction;
};

struct HsTraining {
  HsModel model;
  nn::TrainResult result;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
};

/// Labeled windows (Healthy -> 0, Unhealthy -> 1) of every cell; Unlabeled
/// windows are dropped. Throws LabelingInfeasibleError naming every cell
/// whose labels would overlap.
nn::Dataset labeled_dataset(const std::vector<dataio::CellHistory>& cells,
                            const dataio::FeatureSelection& selection,
                            const dataio::NormalizationStats& stats, int window_length,
                            int window_step, double label_fraction);

/// Trains the classifier with BCE on the labeled windows of `train_cells`,
/// early-stopping on those of `validation_cells`.
HsTraining train_hs(const std::vector<dataio::CellHistory>& train_cells,
                    const std::vector<dataio::CellHistory>& validation_cells,
                    const dataio::FeatureSelection& selection,
                    const dataio::NormalizationStats& stats, const HsTrainOptions& options);

struct Classification {
  windows::HsLabel label = windows::HsLabel::Healthy;
  double probability = 0.0;
};

/// Unhealthy iff probability > 0.5; ties stay healthy.
windows::HsLabel label_from_probability(double probability);

Classification classify(const HsModel& model, const windows::WindowSample& window);

struct FpcDecision {
  std::string cell_id;
  int eol = 0;
  std::optional<int> fpc_cycle;
  bool triggered = false;
  std::vector<std::pair<int, double>> trace;  // (anchor_cycle, P(unhealthy))
};

/// Index of the first element of the first run of k consecutive `true`s.
std::optional<std::size_t> first_run(const std::vector<bool>& flags, int k);

/// Applies the trigger rule to an already computed probability trace.
FpcDecision decide_from_trace(std::string cell_id, int eol, std::vector<std::pair<int, double>> trace,
                              int k = kDefaultTrigger);

/// Classifies every window of `cell` in anchor order and reports the anchor
/// of the first window of the first run of k unhealthy classifications.
FpcDecision decide_fpc(const HsModel& model, const dataio::CellHistory& cell, int k = kDefaultTrigger);

/// Share of labeled windows across `cells` the model classifies correctly.
double labeled_accuracy(const HsModel& model, const std::vector<dataio::CellHistory>& cells,
                        double label_fraction = windows::kDefaultLabelFraction);

}  // namespace rul2stage::fpc

#endif  // RUL2STAGE_FPC_HPP
