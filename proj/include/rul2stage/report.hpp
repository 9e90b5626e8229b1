#ifndef RUL2STAGE_REPORT_HPP
#define RUL2STAGE_REPORT_HPP

#include "rul2stage/eval.hpp"
#include "rul2stage/fpc.hpp"
#include "rul2stage/nn/trainer.hpp"
#include "rul2stage/rulpred.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rul2stage::report {

/// `cell_id,fpc_cycle,triggered`; fpc_cycle is empty when untriggered.
void write_fpc_csv(const std::vector<fpc::FpcDecision>& decisions, const std::filesystem::path& file);

/// `cell_id,anchor_cycle,probability`
void write_trace_csv(const fpc::FpcDecision& decision, const std::filesystem::path& file);

/// `cell_id,anchor_cycle,prediction,target`
void write_curve_csv(const rul::RulCurve& curve, const std::filesystem::path& file);

/// Static line chart of prediction and target against anchor cycle.
std::string curve_svg(const rul::RulCurve& curve);
void write_curve_svg(const rul::RulCurve& curve, const std::filesystem::path& file);

/// `key = value` document; see metrics_text() for the keys.
std::string metrics_text(const eval::MetricsReport& report);
void write_metrics_text(const eval::MetricsReport& report, const std::filesystem::path& file);

/// `cell_id,eol,triggered,fpc_cycle,n_points,mse,mae,mape,n_mape_points`
void write_metrics_csv(const eval::MetricsReport& report, const std::filesystem::path& file);

/// `epoch,train_loss,validation_loss,improved`
void write_history_csv(const std::vector<nn::EpochRecord>& history, const std::filesystem::path& file);

/// Writes `text` to `file`, throwing ConfigError on failure.
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace rul2stage::report

#endif  // RUL2STAGE_REPORT_HPP
