#include "rul2stage/rulpred.hpp"

#include "rul2stage/error.hpp"

#include <algorithm>
#include <map>

namespace rul2stage::rul {

nn::Dataset post_fpc_dataset(const std::vector<dataio::CellHistory>& cells,
                             const std::vector<fpc::FpcDecision>& decisions,
                             const dataio::FeatureSelection& selection,
                             const dataio::NormalizationStats& stats, int window_length,
                             int window_step, std::vector<std::string>* skipped) {
  std::map<std::string, const fpc::FpcDecision*> by_id;
  for (const auto& d : decisions) by_id[d.cell_id] = &d;

  nn::Dataset data;
  for (const auto& cell : cells) {
    const auto it = by_id.find(cell.cell_id);
    if (it == by_id.end() || !it->second->triggered) {
      if (skipped) skipped->push_back(cell.cell_id);
      continue;
    }
    const int fpc = *it->second->fpc_cycle;
    const auto normalized = dataio::apply_normalization(cell, stats, selection);
    auto ws = windows::make_windows(normalized, window_length, window_step);
    for (const auto& t : windows::assign_rul_targets(ws, cell.eol(), fpc)) {
      data.add(std::move(ws[t.window_index].features), t.fraction);
    }
  }
  return data;
}

RulTraining train_rul(const std::vector<dataio::CellHistory>& train_cells,
                      const std::vector<dataio::CellHistory>& validation_cells,
                      const std::vector<fpc::FpcDecision>& decisions,
                      const dataio::FeatureSelection& selection,
                      const dataio::NormalizationStats& stats, const StageOptions& options) {
  options.validate();
  std::vector<std::string> skipped;
  const auto train_set = post_fpc_dataset(train_cells, decisions, selection, stats, options.window_length,
                                          options.window_step, &skipped);
  if (train_set.empty()) throw DataError("RUL training needs at least one triggered training cell");
  std::vector<std::string> skipped_val;
  const auto val_set = post_fpc_dataset(validation_cells, decisions, selection, stats,
                                        options.window_length, options.window_step, &skipped_val);
  if (val_set.empty()) throw DataError("RUL training needs at least one triggered validation cell");
  skipped.insert(skipped.end(), skipped_val.begin(), skipped_val.end());

  nn::Network<double> net(options.model_spec(nn::Head::Rul, selection.size()));
  net.initialize(options.init_seed);
  auto result = nn::train(net, train_set, val_set, nn::Loss::MeanAbsoluteError, options.train, options.on_epoch);
  return {RulModel(std::move(net), selection, stats, options.window_step), std::move(result),
          train_set.size(), val_set.size(), std::move(skipped)};
}

RulCurve predict_curve(const RulModel& model, const dataio::CellHistory& cell, int fpc_cycle) {
  if (fpc_cycle >= cell.eol()) {
    throw ConfigError("cell '" + cell.cell_id + "': fpc " + std::to_string(fpc_cycle) +
                      " is not before eol " + std::to_string(cell.eol()));
  }
  auto ws = model.windows_for(cell);
  std::erase_if(ws, [&](const windows::WindowSample& w) { return w.anchor_cycle < fpc_cycle; });
  const auto raw = model.predict(ws);

  RulCurve curve{cell.cell_id, fpc_cycle, cell.eol(), {}};
  curve.points.reserve(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const int t = ws[i].anchor_cycle;
    curve.points.push_back({t, raw[i], std::clamp(raw[i], 0.0, 1.0),
                            windows::rul_fraction(t, cell.eol(), fpc_cycle)});
  }
  return curve;
}

}  // namespace rul2stage::rul
