#include "rul2stage/fpc.hpp"

#include "rul2stage/error.hpp"

namespace rul2stage::fpc {

nn::Dataset labeled_dataset(const std::vector<dataio::CellHistory>& cells,
                            const dataio::FeatureSelection& selection,
                            const dataio::NormalizationStats& stats, int window_length,
                            int window_step, double label_fraction) {
  std::string infeasible;
  for (const auto& cell : cells) {
    try {
      windows::check_labeling_feasible(cell.eol(), window_length, label_fraction);
    } catch (const LabelingInfeasibleError&) {
      infeasible += (infeasible.empty() ? "" : ", ") + cell.cell_id + " (eol " + std::to_string(cell.eol()) + ")";
    }
  }
  if (!infeasible.empty()) {
    throw LabelingInfeasibleError("health-state labels overlap for: " + infeasible);
  }

  nn::Dataset data;
  for (const auto& cell : cells) {
    const auto normalized = dataio::apply_normalization(cell, stats, selection);
    auto ws = windows::make_windows(normalized, window_length, window_step);
    const auto labels = windows::assign_hs_labels(ws, cell.eol(), label_fraction);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      if (labels[i] == windows::HsLabel::Unlabeled) continue;
      data.add(std::move(ws[i].features), labels[i] == windows::HsLabel::Unhealthy ? 1.0 : 0.0);
    }
  }
  return data;
}

HsTraining train_hs(const std::vector<dataio::CellHistory>& train_cells,
                    const std::vector<dataio::CellHistory>& validation_cells,
                    const dataio::FeatureSelection& selection,
                    const dataio::NormalizationStats& stats, const HsTrainOptions& options) {
  options.stage.validate();
  if (train_cells.empty()) throw ConfigError("health-state training needs at least one training cell");
  if (validation_cells.empty()) throw ConfigError("health-state training needs at least one validation cell");
  const auto& st = options.stage;

  const auto train_set = labeled_dataset(train_cells, selection, stats, st.window_length, st.window_step,
                                         options.label_fraction);
  const auto val_set = labeled_dataset(validation_cells, selection, stats, st.window_length,
                                       st.window_step, options.label_fraction);

  nn::Network<double> net(st.model_spec(nn::Head::HealthState, selection.size()));
  net.initialize(st.init_seed);
  auto result = nn::train(net, train_set, val_set, nn::Loss::BinaryCrossEntropy, st.train, st.on_epoch);
  return {HsModel(std::move(net), selection, stats, st.window_step), std::move(result), train_set.size(),
          val_set.size()};
}

windows::HsLabel label_from_probability(double probability) {
  return probability > kDecisionThreshold ? windows::HsLabel::Unhealthy : windows::HsLabel::Healthy;
}

Classification classify(const HsModel& model, const windows::WindowSample& window) {
  const double p = model.predict(std::span<const windows::WindowSample>(&window, 1)).front();
  return {label_from_probability(p), p};
}

std::optional<std::size_t> first_run(const std::vector<bool>& flags, int k) {
  if (k < 1) throw ConfigError("trigger length must be >= 1");
  std::size_t run = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    run = flags[i] ? run + 1 : 0;
    if (run == static_cast<std::size_t>(k)) return i + 1 - run;
  }
  return std::nullopt;
}

FpcDecision decide_from_trace(std::string cell_id, int eol, std::vector<std::pair<int, double>> trace, int k) {
  if (k < 2) throw ConfigError("trigger length must be >= 2, got " + std::to_string(k));
  if (trace.size() < static_cast<std::size_t>(k)) {
    throw CellTooShortError("cell '" + cell_id + "' yields " + std::to_string(trace.size()) +
                            " windows, fewer than the trigger length " + std::to_string(k));
  }
  std::vector<bool> unhealthy(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    unhealthy[i] = label_from_probability(trace[i].second) == windows::HsLabel::Unhealthy;
  }

  FpcDecision d;
  d.cell_id = std::move(cell_id);
  d.eol = eol;
  if (const auto idx = first_run(unhealthy, k)) {
    d.triggered = true;
    d.fpc_cycle = trace[*idx].first;
  }
  d.trace = std::move(trace);
  return d;
}

FpcDecision decide_fpc(const HsModel& model, const dataio::CellHistory& cell, int k) {
  if (k < 2) throw ConfigError("trigger length must be >= 2, got " + std::to_string(k));
  const int needed = model.window_length() + k - 1;
  if (cell.eol() < needed) {
    throw CellTooShortError("cell '" + cell.cell_id + "' has " + std::to_string(cell.eol()) +
                            " cycles; the trigger needs at least " + std::to_string(needed));
  }
  const auto ws = model.windows_for(cell);
  const auto probs = model.predict(ws);
  std::vector<std::pair<int, double>> trace;
  trace.reserve(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) trace.emplace_back(ws[i].anchor_cycle, probs[i]);
  return decide_from_trace(cell.cell_id, cell.eol(), std::move(trace), k);
}

double labeled_accuracy(const HsModel& model, const std::vector<dataio::CellHistory>& cells,
                        double label_fraction) {
  const auto data = labeled_dataset(cells, model.selection(), model.stats(), model.window_length(),
                                    model.window_step(), label_fraction);
  if (data.empty()) throw ConfigError("no labeled windows to score");
  std::vector<const Eigen::MatrixXd*> ptrs;
  for (const auto& x : data.inputs) ptrs.push_back(&x);
  const auto probs =
      nn::predict<double, Eigen::MatrixXd>(model.network(), std::span<const Eigen::MatrixXd* const>(ptrs));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted_unhealthy = label_from_probability(probs[i]) == windows::HsLabel::Unhealthy;
    if (predicted_unhealthy == (data.targets[i] == 1.0)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.size());
}

}  // namespace rul2stage::fpc
