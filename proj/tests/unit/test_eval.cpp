#include "oracles.hpp"
#include "support.hpp"

#include "rul2stage/error.hpp"
#include "rul2stage/eval.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rul2stage;
using namespace rul2stage::eval;

namespace {

dataio::NormalizationStats unit_stats(const dataio::FeatureSelection& sel) {
  dataio::NormalizationStats s;
  for (const auto c : sel.channels()) s.channels.push_back({c, 0.0, 1.0});
  return s;
}

template <class Model>
Model constant(nn::Head head, double bias) {
  nn::Network<double> net(testing::tiny_spec(head, 1, 10));
  net.mutable_parameters()[net.layout().head_b] = bias;
  const auto sel = dataio::FeatureSelection::first(1);
  return Model(std::move(net), sel, unit_stats(sel), 1);
}

CellReport row(const std::string& id, double mse, double mae, std::optional<double> mape) {
  CurveMetrics m;
  m.mse = mse;
  m.mae = mae;
  m.mape = mape;
  m.n_points = 10;
  return {id, 100, 60, true, m};
}

StageOptions baseline_options() {
  StageOptions o;
  o.window_length = 20;
  o.hidden_size = 8;
  o.layers_per_stack = 1;
  o.n_stacks = 1;
  o.dense_width = 16;
  o.train.max_epochs = 150;
  o.train.patience = 30;
  o.train.seed = 3;
  o.init_seed = 3;
  return o;
}

}  // namespace

TEST_CASE("worked metric example") {
  const std::vector<double> pred{0.9, 0.5, 0.2}, target{1.0, 0.5, 0.0};
  const auto m = compute_metrics(pred, target);
  CHECK(m.mse == doctest::Approx(0.05 / 3.0).epsilon(1e-15));
  CHECK(m.mse == doctest::Approx(0.0166667).epsilon(1e-5));
  CHECK(m.mae == doctest::Approx(0.1).epsilon(1e-15));
  REQUIRE(m.mape);
  CHECK(*m.mape == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(m.n_points == 3);
  CHECK(m.n_mape_points == 2);

  const auto zero = compute_metrics(target, target);
  CHECK(zero.mse == 0.0);
  CHECK(zero.mae == 0.0);
  CHECK(zero.mape == 0.0);
}

TEST_CASE("metric edge cases") {
  const std::vector<double> low{0.001, 0.0}, pred{0.1, 0.2};
  CHECK_FALSE(compute_metrics(pred, low).mape.has_value());
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{}, std::vector<double>{}), ConfigError);
  CHECK_THROWS_AS(compute_metrics(pred, std::vector<double>{1.0}), ShapeError);

  rul::RulCurve untargeted{"c", 10, 20, {{12, 0.5, 0.5, std::nullopt}}};
  CHECK_THROWS_AS(compute_metrics(untargeted), ConfigError);
  CHECK_THROWS_AS(compute_metrics(rul::RulCurve{"c", 10, 20, {}}), ConfigError);
}

TEST_CASE("constant absolute error gives mse = mae squared") {
  const std::vector<double> target{0.9, 0.6, 0.3, 0.05};
  std::vector<double> pred;
  for (std::size_t i = 0; i < target.size(); ++i) pred.push_back(target[i] + (i % 2 ? 0.07 : -0.07));
  const auto m = compute_metrics(pred, target);
  CHECK(m.mse == doctest::Approx(m.mae * m.mae).epsilon(1e-14));
}

TEST_CASE("metrics match a straight-line reference on random curves") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 300)(rng);
    std::vector<double> pred, target;
    for (int i = 0; i < n; ++i) {
      target.push_back(trial % 5 == 0 ? 0.02 * u(rng) : u(rng));
      pred.push_back(std::clamp(target.back() + 0.2 * (u(rng) - 0.5), 0.0, 1.0));
    }
    const auto got = compute_metrics(pred, target);
    const auto want = oracle::brute_metrics(pred, target, kMapeFloor);
    CHECK(std::abs(got.mse - want.mse) <= 1e-12);
    CHECK(std::abs(got.mae - want.mae) <= 1e-12);
    REQUIRE(got.mape.has_value() == want.mape.has_value());
    if (got.mape) CHECK(std::abs(*got.mape - *want.mape) <= 1e-12);
  }
}

TEST_CASE("aggregate is the unweighted mean over triggered cells") {
  std::vector<CellReport> rows;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (int i = 23; i >= 0; --i) rows.push_back(row("c" + std::to_string(100 + i), u(rng), u(rng), u(rng)));
  rows[5].triggered = false;
  rows[5].metrics.reset();
  rows[5].fpc_cycle.reset();

  const auto report = make_report(rows);
  REQUIRE(report.cells.size() == 24);
  CHECK(report.cells.front().cell_id == "c100");
  CHECK(report.untriggered == std::vector<std::string>{rows[5].cell_id});
  CHECK(report.aggregate.n_cells == 23);

  double mse = 0, mae = 0, mape = 0;
  for (const auto& c : report.cells) {
    if (!c.triggered) continue;
    mse += c.metrics->mse;
    mae += c.metrics->mae;
    mape += *c.metrics->mape;
  }
  CHECK(report.aggregate.mse == doctest::Approx(mse / 23).epsilon(1e-14));
  CHECK(report.aggregate.mae == doctest::Approx(mae / 23).epsilon(1e-14));
  CHECK(*report.aggregate.mape == doctest::Approx(mape / 23).epsilon(1e-14));
}

TEST_CASE("fleet evaluation runs both stages per cell") {
  const auto hs = constant<fpc::HsModel>(nn::Head::HealthState, 4.0);
  const auto rul = constant<rul::RulModel>(nn::Head::Rul, 0.5);
  std::vector<dataio::CellHistory> cells;
  for (int i = 0; i < 4; ++i) cells.push_back(testing::synthetic_cell("z" + std::to_string(3 - i), 100 + 20 * i));
  const auto ev = evaluate_fleet(rul, hs, cells);
  REQUIRE(ev.report.cells.size() == 4);
  CHECK(ev.report.cells.front().cell_id == "z0");
  CHECK(ev.curves.size() == 4);
  CHECK(ev.decisions[0].fpc_cycle == 10);
  const auto direct = compute_metrics(ev.curves[0]);
  CHECK(ev.report.cells[0].metrics->mae == direct.mae);

  const auto never = constant<fpc::HsModel>(nn::Head::HealthState, -4.0);
  const auto none = evaluate_fleet(rul, never, cells);
  CHECK(none.report.aggregate.n_cells == 0);
  CHECK(none.report.untriggered.size() == 4);
  CHECK(none.curves.empty());
}

TEST_CASE("incompatible stage models are refused") {
  const auto hs = constant<fpc::HsModel>(nn::Head::HealthState, 4.0);
  nn::Network<double> net(testing::tiny_spec(nn::Head::Rul, 2, 10));
  const auto sel = dataio::FeatureSelection::first(2);
  const rul::RulModel other(std::move(net), sel, unit_stats(sel), 1);
  CHECK_THROWS_AS(evaluate_fleet(other, hs, {testing::synthetic_cell("a", 100)}), ShapeError);
}

TEST_CASE("baseline split") {
  const auto s = baseline_split(testing::synthetic_cell("a", 1000));
  CHECK(s.input_end == 400);
  CHECK(s.target_length() == 600);
  CHECK_THROWS_AS(baseline_split(testing::synthetic_cell("b", 100), 0.4, 50), CellTooShortError);
  const auto edge = baseline_split(testing::synthetic_cell("a", 1000), 0.999);
  CHECK(edge.input_end == 999);
  CHECK(edge.target_length() == 1);
  CHECK_THROWS_AS(baseline_split(testing::synthetic_cell("a", 1000), 1.0), ConfigError);
}

TEST_CASE("baseline forecast of a noiseless linear fade stays within 0.02 Ah") {
  const auto cell = testing::make_cell("lin", 500, [](int c) { return 1.1 - 0.0004 * (c - 1); });
  const auto split = baseline_split(cell, 0.4, 20);
  const auto f = baseline_forecast(cell, split, baseline_options());
  REQUIRE(f.capacity.size() == static_cast<std::size_t>(split.target_length()));
  CHECK(f.cycles.front() == 201);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.capacity.size(); ++i) worst = std::max(worst, std::abs(f.capacity[i] - f.truth[i]));
  MESSAGE("linear worst error ", worst, " Ah");
  CHECK(worst <= 0.02);
}

TEST_CASE("baseline forecast of a constant cell stays constant within 0.01 Ah") {
  const auto cell = testing::make_cell("flat", 300, [](int) { return 1.08; });
  const auto split = baseline_split(cell, 0.4, 20);
  const auto f = baseline_forecast(cell, split, baseline_options());
  CHECK(f.capacity.size() == 180);
  for (const double c : f.capacity) CHECK(std::abs(c - 1.08) <= 0.01);
}
