#ifndef RUL2STAGE_EVAL_HPP
#define RUL2STAGE_EVAL_HPP

#include "rul2stage/dataio.hpp"
#include "rul2stage/fpc.hpp"
#include "rul2stage/rulpred.hpp"
#include "rul2stage/stage.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rul2stage::eval {

inline constexpr double kMapeFloor = 0.01;

struct CurveMetrics {
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> mape;  // absent when no target reaches the floor
  std::size_t n_points = 0;
  std::size_t n_mape_points = 0;
};

/// MSE and MAE over all points; MAPE over points whose target >= floor.
CurveMetrics compute_metrics(std::span<const double> predictions, std::span<const double> targets,
                             double mape_floor = kMapeFloor);

/// Uses the reported (clamped) predictions. Every point needs a target.
CurveMetrics compute_metrics(const rul::RulCurve& curve, double mape_floor = kMapeFloor);

struct CellReport {
  std::string cell_id;
  int eol = 0;
  std::optional<int> fpc_cycle;
  bool triggered = false;
  std::optional<CurveMetrics> metrics;
};

struct Aggregate {
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> mape;
  std::size_t n_cells = 0;       // triggered cells averaged
  std::size_t n_mape_cells = 0;  // of those, cells with a MAPE value
};

struct MetricsReport {
  std::vector<CellReport> cells;  // sorted by cell_id
  Aggregate aggregate;
  std::vector<std::string> untriggered;
};

/// Unweighted mean over triggered cells, summed in cell_id order.
Aggregate aggregate(std::span<const CellReport> cells);

/// Sorts rows by cell_id and fills the aggregate and untriggered list.
MetricsReport make_report(std::vector<CellReport> cells);

struct FleetEvaluation {
  MetricsReport report;
  std::vector<fpc::FpcDecision> decisions;  // sorted by cell_id
  std::vector<rul::RulCurve> curves;        // triggered cells only, sorted by cell_id
};

/// Stage 1 -> trigger -> stage 2 -> metrics for every test cell.
FleetEvaluation evaluate_fleet(const rul::RulModel& rul_model, const fpc::HsModel& hs_model,
                               const std::vector<dataio::CellHistory>& cells,
                               int trigger = fpc::kDefaultTrigger, double mape_floor = kMapeFloor);

/// Conventional scheme: the first q of a cell's cycles are input, the rest
/// are forecast.
struct BaselineSplit {
  std::string cell_id;
  double q = 0.4;
  int input_end = 0;  // input cycles 1..input_end
  int eol = 0;        // target cycles input_end+1..eol

  int target_length() const { return eol - input_end; }
};

BaselineSplit baseline_split(const dataio::CellHistory& cell, double q = 0.4,
                             int window_length = windows::kDefaultWindow);

struct BaselineForecast {
  std::string cell_id;
  std::vector<int> cycles;         // target cycles
  std::vector<double> capacity;    // forecast discharge capacity, Ah
  std::vector<double> truth;       // measured discharge capacity, Ah
  nn::TrainResult training;
};

/// Trains a one-step-ahead discharge-capacity model on the input segment
/// (forecast head, MSE) and rolls it forward over the target segment.
/// Inputs are window values relative to the window's last value, scaled by
/// window_length times the mean absolute one-cycle change of the input
/// segment; the model predicts the next change on the same scale.
BaselineForecast baseline_forecast(const dataio::CellHistory& cell, const BaselineSplit& split,
                                   const StageOptions& options);

}  // namespace rul2stage::eval

#endif  // RUL2STAGE_EVAL_HPP
