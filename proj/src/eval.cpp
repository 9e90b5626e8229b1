#include "rul2stage/eval.hpp"

#include "rul2stage/error.hpp"

#include <algorithm>
#include <cmath>

namespace rul2stage::eval {

CurveMetrics compute_metrics(std::span<const double> predictions, std::span<const double> targets,
                             double mape_floor) {
  if (predictions.size() != targets.size()) throw ShapeError("prediction and target counts differ");
  if (predictions.empty()) throw ConfigError("cannot score an empty curve");
  if (!(mape_floor > 0.0)) throw ConfigError("MAPE floor must be > 0");
  CurveMetrics m;
  double sq = 0.0, ab = 0.0, pct = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double err = std::abs(targets[i] - predictions[i]);
    sq += err * err;
    ab += err;
    if (targets[i] >= mape_floor) {
      pct += err / targets[i];
      ++m.n_mape_points;
    }
  }
  m.n_points = predictions.size();
  const double n = static_cast<double>(m.n_points);
  m.mse = sq / n;
  m.mae = ab / n;
  if (m.n_mape_points > 0) m.mape = pct / static_cast<double>(m.n_mape_points);
  return m;
}

CurveMetrics compute_metrics(const rul::RulCurve& curve, double mape_floor) {
  std::vector<double> preds, targets;
  preds.reserve(curve.points.size());
  targets.reserve(curve.points.size());
  for (const auto& p : curve.points) {
    if (!p.target) throw ConfigError("curve '" + curve.cell_id + "' has points without targets");
    preds.push_back(p.prediction);
    targets.push_back(*p.target);
  }
  if (preds.empty()) throw ConfigError("curve '" + curve.cell_id + "' has no targets");
  return compute_metrics(preds, targets, mape_floor);
}

Aggregate aggregate(std::span<const CellReport> cells) {
  std::vector<const CellReport*> sorted;
  for (const auto& c : cells) {
    if (c.triggered && c.metrics) sorted.push_back(&c);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const CellReport* a, const CellReport* b) { return a->cell_id < b->cell_id; });
  Aggregate a;
  double mape_sum = 0.0;
  for (const auto* c : sorted) {
    a.mse += c->metrics->mse;
    a.mae += c->metrics->mae;
    if (c->metrics->mape) {
      mape_sum += *c->metrics->mape;
      ++a.n_mape_cells;
    }
  }
  a.n_cells = sorted.size();
  if (a.n_cells > 0) {
    a.mse /= static_cast<double>(a.n_cells);
    a.mae /= static_cast<double>(a.n_cells);
  }
  if (a.n_mape_cells > 0) a.mape = mape_sum / static_cast<double>(a.n_mape_cells);
  return a;
}

MetricsReport make_report(std::vector<CellReport> cells) {
  std::sort(cells.begin(), cells.end(),
            [](const CellReport& a, const CellReport& b) { return a.cell_id < b.cell_id; });
  MetricsReport r;
  r.aggregate = aggregate(cells);
  for (const auto& c : cells) {
    if (!c.triggered) r.untriggered.push_back(c.cell_id);
  }
  r.cells = std::move(cells);
  return r;
}

FleetEvaluation evaluate_fleet(const rul::RulModel& rul_model, const fpc::HsModel& hs_model,
                               const std::vector<dataio::CellHistory>& cells, int trigger,
                               double mape_floor) {
  require_compatible(rul_model, hs_model);
  std::vector<const dataio::CellHistory*> order;
  for (const auto& c : cells) order.push_back(&c);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->cell_id < b->cell_id; });

  FleetEvaluation out;
  std::vector<CellReport> rows;
  for (const auto* cell : order) {
    auto decision = fpc::decide_fpc(hs_model, *cell, trigger);
    CellReport row{cell->cell_id, cell->eol(), decision.fpc_cycle, decision.triggered, std::nullopt};
    if (decision.triggered) {
      auto curve = rul::predict_curve(rul_model, *cell, *decision.fpc_cycle);
      row.metrics = compute_metrics(curve, mape_floor);
      out.curves.push_back(std::move(curve));
    }
    rows.push_back(std::move(row));
    out.decisions.push_back(std::move(decision));
  }
  out.report = make_report(std::move(rows));
  return out;
}

BaselineSplit baseline_split(const dataio::CellHistory& cell, double q, int window_length) {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("baseline fraction q must lie in (0, 1)");
  const int input_end = static_cast<int>(std::floor(q * cell.eol() + 1e-9));
  if (input_end < window_length) {
    throw CellTooShortError("cell '" + cell.cell_id + "': input segment of " + std::to_string(input_end) +
                            " cycles is shorter than the window length " + std::to_string(window_length));
  }
  if (input_end >= cell.eol()) {
    throw ConfigError("cell '" + cell.cell_id + "': q leaves no cycles to forecast");
  }
  return {cell.cell_id, q, input_end, cell.eol()};
}

namespace {

constexpr double kMinScale = 1e-4;  // Ah

Eigen::MatrixXd relative_window(std::span<const double> values, double scale) {
  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd w(1, n);
  const double last = values.back();
  for (Eigen::Index j = 0; j < n; ++j) w(0, j) = (values[static_cast<std::size_t>(j)] - last) / scale;
  return w;
}

}  // namespace

BaselineForecast baseline_forecast(const dataio::CellHistory& cell, const BaselineSplit& split,
                                   const StageOptions& options) {
  options.validate();
  const int n_w = options.window_length;
  if (split.cell_id != cell.cell_id || split.eol != cell.eol()) {
    throw ConfigError("baseline split does not belong to cell '" + cell.cell_id + "'");
  }
  if (split.input_end < n_w + 2) {
    throw CellTooShortError("cell '" + cell.cell_id + "': input segment too short for training pairs");
  }

  std::vector<double> capacity;
  capacity.reserve(static_cast<std::size_t>(cell.eol()));
  for (const auto& r : cell.records) capacity.push_back(r.discharge_capacity);

  double mean_step = 0.0;
  for (int c = 1; c < split.input_end; ++c) {
    mean_step += std::abs(capacity[static_cast<std::size_t>(c)] - capacity[static_cast<std::size_t>(c - 1)]);
  }
  mean_step /= static_cast<double>(split.input_end - 1);
  const double scale = std::max(mean_step * n_w, kMinScale);

  // Pair k: window ending at cycle k (1-based), target cycle k + 1, all
  // inside the input segment. The chronologically last pairs validate.
  const std::span<const double> cap(capacity);
  std::vector<std::pair<Eigen::MatrixXd, double>> pairs;
  for (int k = n_w; k < split.input_end; ++k) {
    const auto window = cap.subspan(static_cast<std::size_t>(k - n_w), static_cast<std::size_t>(n_w));
    const double next = (cap[static_cast<std::size_t>(k)] - window.back()) / scale;
    pairs.emplace_back(relative_window(window, scale), next);
  }
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(options.train.validation_fraction * static_cast<double>(pairs.size()))),
      1, pairs.size() - 1);
  nn::Dataset train_set, val_set;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto& dst = i + n_val < pairs.size() ? train_set : val_set;
    dst.add(std::move(pairs[i].first), pairs[i].second);
  }

  nn::Network<double> net(options.model_spec(nn::Head::Forecast, 1));
  net.initialize(options.init_seed);
  auto result = nn::train(net, train_set, val_set, nn::Loss::MeanSquaredError, options.train, options.on_epoch);

  BaselineForecast out;
  out.cell_id = cell.cell_id;
  out.training = std::move(result);
  std::vector<double> history(capacity.begin(), capacity.begin() + split.input_end);
  for (int c = split.input_end + 1; c <= cell.eol(); ++c) {
    const auto window = std::span<const double>(history).last(static_cast<std::size_t>(n_w));
    const double next = window.back() + net.forward_one(relative_window(window, scale)) * scale;
    history.push_back(next);
    out.cycles.push_back(c);
    out.capacity.push_back(history.back());
    out.truth.push_back(capacity[static_cast<std::size_t>(c - 1)]);
  }
  return out;
}

}  // namespace rul2stage::eval
