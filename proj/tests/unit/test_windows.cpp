#include "oracles.hpp"
#include "support.hpp"

#include "rul2stage/error.hpp"
#include "rul2stage/windows.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace rul2stage;
using namespace rul2stage::windows;

namespace {

// Windows carrying only their cycle range; labels and targets never look at features.
std::vector<WindowSample> bare_windows(int eol, int n_w) {
  std::vector<WindowSample> out;
  for (int s = 1; s + n_w - 1 <= eol; ++s) out.push_back({"c", s, s + n_w - 1, {}});
  return out;
}

}  // namespace

TEST_CASE("window counts and anchors") {
  const auto sel = dataio::FeatureSelection::first(2);
  const auto w = make_windows(testing::synthetic_cell("c", 150), sel, 50, 1);
  REQUIRE(w.size() == 101);
  CHECK(w.front().anchor_cycle == 50);
  CHECK(w.back().anchor_cycle == 150);
  CHECK(w.front().features.rows() == 2);
  CHECK(w.front().features.cols() == 50);
  CHECK(w[3].features(0, 0) == testing::synthetic_cell("c", 150).records[3].discharge_capacity);

  CHECK(make_windows(testing::make_cell("c", 50, [](int) { return 1.0; }), sel, 50, 1).size() == 1);
  CHECK_THROWS_AS(make_windows(testing::make_cell("c", 49, [](int) { return 1.0; }), sel, 50, 1),
                  CellTooShortError);

  CHECK(window_count(150, 50, 7) == 15);
  CHECK(make_windows(testing::synthetic_cell("c", 150), sel, 50, 7).size() == 15);
}

TEST_CASE("health-state labels by direct rule") {
  CHECK(hs_label(10, 59, 2000, 0.1) == HsLabel::Healthy);
  CHECK(hs_label(1901, 1950, 2000, 0.1) == HsLabel::Unhealthy);
  CHECK(hs_label(500, 549, 2000, 0.1) == HsLabel::Unlabeled);

  const auto labels = assign_hs_labels(bare_windows(2000, 50), 2000, 0.1);
  CHECK(std::count(labels.begin(), labels.end(), HsLabel::Healthy) == 200);
  CHECK(labels[199] == HsLabel::Healthy);
  CHECK(labels[200] == HsLabel::Unlabeled);
}

TEST_CASE("eol 120 with window 50 is feasible: 12 healthy, 13 unhealthy") {
  const auto labels = assign_hs_labels(bare_windows(120, 50), 120, 0.1);
  CHECK(std::count(labels.begin(), labels.end(), HsLabel::Healthy) == 12);
  CHECK(std::count(labels.begin(), labels.end(), HsLabel::Unhealthy) == 13);
}

TEST_CASE("overlapping label regions are infeasible") {
  CHECK_THROWS_AS(assign_hs_labels(bare_windows(60, 50), 60, 0.1), LabelingInfeasibleError);
  CHECK_THROWS_AS(check_labeling_feasible(1000, 50, 0.5), LabelingInfeasibleError);
  CHECK_THROWS_AS(check_labeling_feasible(1000, 50, 0.0), ConfigError);
}

TEST_CASE("p = 0.5 leaves no window unlabeled by either condition") {
  const int eol = 1000;
  for (const auto& w : bare_windows(eol, 50)) {
    CHECK((w.start_cycle <= healthy_start_limit(eol, 0.5) || w.anchor_cycle >= unhealthy_anchor_limit(eol, 0.5)));
  }
}

TEST_CASE("labels match brute-force enumeration on random tuples") {
  std::mt19937_64 rng(2024);
  int feasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n_w = std::uniform_int_distribution<int>(1, 80)(rng);
    const int eol = std::uniform_int_distribution<int>(n_w, 2500)(rng);
    const int per_mille = std::uniform_int_distribution<int>(1, 400)(rng);
    const auto expected = oracle::brute_labels(eol, n_w, per_mille);
    const auto ws = bare_windows(eol, n_w);
    CAPTURE(eol);
    CAPTURE(n_w);
    CAPTURE(per_mille);
    if (!expected) {
      CHECK_THROWS_AS(assign_hs_labels(ws, eol, per_mille / 1000.0), LabelingInfeasibleError);
      continue;
    }
    ++feasible;
    CHECK(assign_hs_labels(ws, eol, per_mille / 1000.0) == *expected);
  }
  CHECK(feasible > 100);
}

TEST_CASE("rul fraction targets") {
  CHECK(rul_fraction(600, 1000, 600) == 1.0);
  CHECK(rul_fraction(1000, 1000, 600) == 0.0);
  CHECK(rul_fraction(800, 1000, 600) == 0.5);

  const auto ws = bare_windows(1000, 50);
  const auto edge = assign_rul_targets(ws, 1000, 999);
  REQUIRE(edge.size() == 2);
  CHECK(edge[0].fraction == 1.0);
  CHECK(edge[1].fraction == 0.0);
  CHECK_THROWS_AS(assign_rul_targets(ws, 1000, 1000), ConfigError);
  CHECK_THROWS_AS(rul_fraction(10, 1000, 1000), ConfigError);
}

TEST_CASE("rul targets match brute-force enumeration on random tuples") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_w = std::uniform_int_distribution<int>(1, 80)(rng);
    const int eol = std::uniform_int_distribution<int>(n_w + 1, 2500)(rng);
    const int fpc = std::uniform_int_distribution<int>(1, eol - 1)(rng);
    const auto ws = bare_windows(eol, n_w);
    const auto got = assign_rul_targets(ws, eol, fpc);
    const auto expected = oracle::brute_rul_targets(eol, n_w, fpc);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(ws[got[i].window_index].anchor_cycle == expected[i].first);
      CHECK(got[i].fraction == expected[i].second);
    }
  }
}
