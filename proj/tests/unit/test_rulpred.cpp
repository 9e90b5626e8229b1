#include "support.hpp"

#include "rul2stage/error.hpp"
#include "rul2stage/rulpred.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace rul2stage;
using namespace rul2stage::rul;

namespace {

dataio::NormalizationStats unit_stats(const dataio::FeatureSelection& sel) {
  dataio::NormalizationStats s;
  for (const auto c : sel.channels()) s.channels.push_back({c, 0.0, 1.0});
  return s;
}

fpc::FpcDecision triggered_at(const std::string& id, int eol, int fpc) {
  fpc::FpcDecision d;
  d.cell_id = id;
  d.eol = eol;
  d.triggered = true;
  d.fpc_cycle = fpc;
  return d;
}

RulModel fixed_model(double bias, int n_features = 1, int n_w = 10) {
  nn::Network<double> net(testing::tiny_spec(nn::Head::Rul, n_features, n_w));
  net.mutable_parameters()[net.layout().head_b] = bias;
  const auto sel = dataio::FeatureSelection::first(n_features);
  return RulModel(std::move(net), sel, unit_stats(sel), 1);
}

StageOptions small_options() {
  StageOptions o;
  o.window_length = 10;
  o.hidden_size = 8;
  o.layers_per_stack = 1;
  o.n_stacks = 1;
  o.dense_width = 16;
  o.train.max_epochs = 3;
  return o;
}

}  // namespace

TEST_CASE("post-FPC targets start at exactly 1 and end at 0") {
  const auto sel = dataio::FeatureSelection::first(1);
  const auto cell = testing::synthetic_cell("a", 200);
  std::vector<std::string> skipped;
  const auto data = post_fpc_dataset({cell, testing::synthetic_cell("b", 150)}, {triggered_at("a", 200, 120)}, sel,
                                     unit_stats(sel), 50, 1, &skipped);
  REQUIRE(data.size() == 81);
  CHECK(data.targets.front() == 1.0);
  CHECK(data.targets.back() == 0.0);
  CHECK(skipped == std::vector<std::string>{"b"});
}

TEST_CASE("curve length, clamp, and anchors") {
  const auto cell = testing::synthetic_cell("a", 300);
  for (const int fpc : {5, 10, 180, 299}) {
    const auto curve = predict_curve(fixed_model(1.7), cell, fpc);
    CHECK(curve.points.size() == static_cast<std::size_t>(300 - std::max(fpc, 10) + 1));
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
      const auto& p = curve.points[i];
      CHECK(p.raw == doctest::Approx(1.7));
      CHECK(p.prediction == 1.0);
      if (i > 0) CHECK(p.anchor_cycle == curve.points[i - 1].anchor_cycle + 1);
      CHECK(p.anchor_cycle >= fpc);
    }
  }
  const auto floor = predict_curve(fixed_model(-2.0), cell, 100);
  CHECK(std::all_of(floor.points.begin(), floor.points.end(), [](const CurvePoint& p) { return p.raw == 0.0; }));
  CHECK_THROWS_AS(predict_curve(fixed_model(0.5), cell, 300), ConfigError);
}

TEST_CASE("a model reading other features is refused") {
  auto model = fixed_model(0.5, 2);
  windows::WindowSample w{"a", 1, 10, Eigen::MatrixXd::Zero(1, 10)};
  CHECK_THROWS_AS(model.predict(std::span<const windows::WindowSample>(&w, 1)), ShapeError);
  dataio::NormalizationStats partial{{{dataio::Channel::DischargeCapacity, 0.0, 1.0}}};
  CHECK_THROWS_AS(RulModel(nn::Network<double>(testing::tiny_spec(nn::Head::Rul, 2, 10)),
                           dataio::FeatureSelection::first(2), partial, 1),
                  ShapeError);
}

TEST_CASE("training without triggered cells is an error") {
  const auto sel = dataio::FeatureSelection::first(1);
  const std::vector<dataio::CellHistory> train{testing::synthetic_cell("a", 200)};
  const std::vector<dataio::CellHistory> val{testing::synthetic_cell("b", 200)};
  fpc::FpcDecision quiet;
  quiet.cell_id = "a";
  CHECK_THROWS_AS(train_rul(train, val, {quiet, triggered_at("b", 200, 100)}, sel, unit_stats(sel), small_options()),
                  DataError);
  CHECK_THROWS_AS(train_rul(train, val, {triggered_at("a", 200, 100)}, sel, unit_stats(sel), small_options()),
                  DataError);
  const auto ok = train_rul(train, val, {triggered_at("a", 200, 100), triggered_at("b", 200, 120)}, sel,
                            unit_stats(sel), small_options());
  CHECK(ok.train_samples == 101);
  CHECK(ok.validation_samples == 81);
  CHECK(ok.untriggered_cells.empty());
}

TEST_CASE("trained to convergence on one noiseless cell, the curve tracks the target") {
  const auto cell = testing::synthetic_cell("n", 400);
  const auto sel = dataio::FeatureSelection::first(1);
  const auto stats = dataio::compute_normalization({cell}, sel);
  const int fpc = 280;

  auto o = small_options();
  o.window_length = 20;
  o.hidden_size = 16;
  o.dense_width = 32;
  o.train.max_epochs = 400;
  o.train.patience = 400;
  o.train.adam.learning_rate = 0.003;
  o.train.seed = 1;
  o.init_seed = 1;
  const auto trained = train_rul({cell}, {cell}, {triggered_at("n", 400, fpc)}, sel, stats, o);
  const auto curve = predict_curve(trained.model, cell, fpc);
  double worst = 0.0;
  for (const auto& p : curve.points) worst = std::max(worst, std::abs(p.prediction - *p.target));
  MESSAGE("max deviation ", worst, " after ", trained.result.history.size(), " epochs");
  CHECK(worst <= 0.05);
}
