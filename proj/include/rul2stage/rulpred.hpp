#ifndef RUL2STAGE_RULPRED_HPP
#define RUL2STAGE_RULPRED_HPP

#include "rul2stage/dataio.hpp"
#include "rul2stage/fpc.hpp"
#include "rul2stage/stage.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rul2stage::rul {

/// RUL-fraction regressor: rectifier head.
class RulModel : public StageModel {
 public:
  using StageModel::StageModel;
  explicit RulModel(const nn::Checkpoint& checkpoint) : StageModel(checkpoint, nn::Head::Rul) {}
};

struct RulTraining {
  RulModel model;
  nn::TrainResult result;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
  std::vector<std::string> untriggered_cells;  // excluded from training
};

/// Post-FPC windows of every triggered cell with their RUL-fraction targets.
/// Cells without a triggered decision are skipped and reported in `skipped`.
nn::Dataset post_fpc_dataset(const std::vector<dataio::CellHistory>& cells,
                             const std::vector<fpc::FpcDecision>& decisions,
                             const dataio::FeatureSelection& selection,
                             const dataio::NormalizationStats& stats, int window_length,
                             int window_step, std::vector<std::string>* skipped = nullptr);

/// Trains with MAE on the pooled post-FPC windows of all triggered cells.
RulTraining train_rul(const std::vector<dataio::CellHistory>& train_cells,
                      const std::vector<dataio::CellHistory>& validation_cells,
                      const std::vector<fpc::FpcDecision>& decisions,
                      const dataio::FeatureSelection& selection,
                      const dataio::NormalizationStats& stats, const StageOptions& options);

struct CurvePoint {
  int anchor_cycle = 0;
  double raw = 0.0;         // rectifier output
  double prediction = 0.0;  // raw clamped to [0, 1]
  std::optional<double> target;
};

struct RulCurve {
  std::string cell_id;
  int fpc_cycle = 0;
  int eol = 0;
  std::vector<CurvePoint> points;
};

/// One prediction per window whose anchor is at or after `fpc_cycle`.
/// Targets follow (eol - anchor) / (eol - fpc) using the cell's own EOL.
RulCurve predict_curve(const RulModel& model, const dataio::CellHistory& cell, int fpc_cycle);

}  // namespace rul2stage::rul

#endif  // RUL2STAGE_RULPRED_HPP
