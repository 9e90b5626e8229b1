#include "oracles.hpp"
#include "support.hpp"

#include "rul2stage/error.hpp"
#include "rul2stage/nn/adam.hpp"
#include "rul2stage/nn/checkpoint.hpp"
#include "rul2stage/nn/loss.hpp"
#include "rul2stage/nn/network.hpp"
#include "rul2stage/nn/trainer.hpp"
#include "rul2stage/stage.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

using namespace rul2stage;
using nn::Head;

namespace {

std::vector<Eigen::MatrixXd> random_inputs(int n, int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Eigen::MatrixXd> out;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd x(rows, cols);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = z(rng);
    out.push_back(x);
  }
  return out;
}

Eigen::RowVectorXd run(const nn::Network<double>& net, const std::vector<Eigen::MatrixXd>& xs,
                       nn::ForwardCache<double>* cache = nullptr) {
  std::vector<const Eigen::MatrixXd*> ptrs;
  for (const auto& x : xs) ptrs.push_back(&x);
  const auto packed = nn::pack_batch<double, Eigen::MatrixXd>(std::span<const Eigen::MatrixXd* const>(ptrs),
                                                              net.spec().n_steps, net.spec().step_dim);
  return net.forward(packed, static_cast<Eigen::Index>(xs.size()), cache);
}

nn::Dataset toy_hs_set(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.02);
  nn::Dataset d;
  for (int i = 0; i < n; ++i) {
    const bool unhealthy = i % 2 == 1;
    Eigen::MatrixXd x(1, 10);
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(0, c) = (unhealthy ? 0.8 : 1.0) + noise(rng);
    d.add(x, unhealthy ? 1.0 : 0.0);
  }
  return d;
}

nn::ModelSpec toy_spec(Head head) {
  nn::ModelSpec s;
  s.head = head;
  s.n_steps = 1;
  s.step_dim = 10;
  s.hidden_size = 8;
  s.layers_per_stack = 1;
  s.n_stacks = 1;
  s.dense_width = 16;
  return s;
}

}  // namespace

TEST_CASE("analytic gradients match central differences on a 7x50 input, hidden 4") {
  std::mt19937_64 rng(11);
  for (const Head head : {Head::HealthState, Head::Rul, Head::Forecast}) {
    nn::ModelSpec spec;
    spec.head = head;
    spec.hidden_size = 4;
    spec.dense_width = 16;
    nn::Network<double> net(spec);
    net.initialize(3);
    const auto xs = random_inputs(3, 7, 50, rng);
    Eigen::RowVectorXd upstream = Eigen::RowVectorXd::Random(3);
    const auto check = oracle::gradient_check(net, xs, upstream);
    CAPTURE(nn::head_name(head));
    MESSAGE(nn::head_name(head), " max relative error ", check.max_relative_error, ", skipped ", check.skipped);
    CHECK(check.max_relative_error < 1e-4);
    CHECK(check.checked > check.skipped * 100);
  }
}

TEST_CASE("backward is linear in the upstream gradient") {
  std::mt19937_64 rng(5);
  nn::Network<double> net(testing::tiny_spec(Head::HealthState));
  net.initialize(9);
  const auto xs = random_inputs(4, 2, 6, rng);
  nn::ForwardCache<double> cache;
  run(net, xs, &cache);
  const Eigen::RowVectorXd g = Eigen::RowVectorXd::Random(4);

  const Eigen::VectorXd zero = net.backward(cache, Eigen::RowVectorXd::Zero(4));
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd once = net.backward(cache, g);
  const Eigen::VectorXd twice = net.backward(cache, 2.0 * g);
  CHECK((twice - 2.0 * once).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + once.cwiseAbs().maxCoeff()));
}

TEST_CASE("a cache from before a parameter change is rejected") {
  std::mt19937_64 rng(1);
  nn::Network<double> net(testing::tiny_spec(Head::Rul));
  net.initialize(1);
  nn::ForwardCache<double> cache;
  run(net, random_inputs(2, 2, 6, rng), &cache);
  net.mutable_parameters()[0] += 1.0;
  CHECK_THROWS_AS(net.backward(cache, Eigen::RowVectorXd::Ones(2)), ConfigError);

  nn::Network<double> other(testing::tiny_spec(Head::Rul));
  CHECK_THROWS_AS(other.backward(cache, Eigen::RowVectorXd::Ones(2)), ConfigError);
}

TEST_CASE("head output ranges") {
  std::mt19937_64 rng(2);
  const auto xs = random_inputs(64, 2, 6, rng);
  nn::Network<double> hs(testing::tiny_spec(Head::HealthState));
  hs.initialize(4);
  const auto p = run(hs, xs);
  CHECK(p.minCoeff() > 0.0);
  CHECK(p.maxCoeff() < 1.0);

  nn::Network<double> rul(testing::tiny_spec(Head::Rul));
  rul.initialize(4);
  rul.mutable_parameters()[rul.layout().head_b] = -3.0;
  CHECK(run(rul, xs).minCoeff() >= 0.0);
}

TEST_CASE("zero input through zero weights gives 0.5 on the logistic head") {
  nn::Network<double> net(nn::ModelSpec{});
  CHECK(net.forward_one(Eigen::MatrixXd::Zero(7, 50)) == 0.5);
}

TEST_CASE("input shape is checked") {
  nn::Network<double> net(testing::tiny_spec(Head::HealthState));
  CHECK_THROWS_AS(net.forward_one(Eigen::MatrixXd::Zero(3, 6)), ShapeError);
  CHECK_THROWS_AS(net.forward_one(Eigen::MatrixXd::Zero(2, 5)), ShapeError);
}

TEST_CASE("non-finite output raises a numeric error") {
  nn::Network<double> net(testing::tiny_spec(Head::Forecast));
  net.initialize(1);
  net.mutable_parameters()[net.layout().head_b] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(net.forward_one(Eigen::MatrixXd::Zero(2, 6)), NumericError);
}

TEST_CASE("shape chain with default architecture and 7 features") {
  nn::Network<double> net(nn::ModelSpec{});
  net.initialize(0);
  nn::ForwardCache<double> cache;
  net.forward_one(Eigen::MatrixXd::Constant(7, 50, 0.1), &cache);
  const auto chain = nn::shape_chain(net.spec(), cache);
  REQUIRE(chain.size() == 6);
  const std::vector<std::pair<Eigen::Index, Eigen::Index>> expected = {{7, 50}, {7, 50}, {7, 50}, {350, 1}, {128, 1}, {1, 1}};
  for (std::size_t i = 0; i < chain.size(); ++i) {
    CAPTURE(chain[i].name);
    CHECK(chain[i].rows == expected[i].first);
    CHECK(chain[i].cols == expected[i].second);
  }
}

TEST_CASE("binary cross entropy") {
  CHECK(nn::bce_loss(0.5, 1.0).value == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(nn::bce_loss(0.9, 0.0).value == doctest::Approx(2.302585).epsilon(1e-6));
  CHECK(nn::bce_loss(1.0, 1.0).value == doctest::Approx(0.0).epsilon(1e-11));
  CHECK(nn::bce_loss(1.0, 1.0).value >= 0.0);
  CHECK(nn::bce_loss(0.0, 1.0).value == doctest::Approx(-std::log(1e-12)));
  CHECK_THROWS_AS(nn::bce_loss(0.5, 0.5), ConfigError);
  CHECK_THROWS_AS(nn::bce_loss(0.5, 2.0), ConfigError);
}

TEST_CASE("mean absolute error") {
  const std::vector<double> pred{0.9, 0.5, 0.2}, target{1.0, 0.5, 0.0};
  const auto l = nn::mae_loss(pred, target);
  CHECK(l.value == doctest::Approx(0.1));
  CHECK(l.gradient[0] == doctest::Approx(-1.0 / 3));
  CHECK(l.gradient[1] == 0.0);
  CHECK(l.gradient[2] == doctest::Approx(1.0 / 3));
  CHECK(nn::mae_loss(pred, pred).value == 0.0);
  CHECK(nn::mae_loss(std::vector<double>{0.0}, std::vector<double>{1.0}).value == 1.0);
  CHECK_THROWS_AS(nn::mae_loss(std::vector<double>{}, std::vector<double>{}), ConfigError);
  CHECK_THROWS_AS(nn::mae_loss(pred, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("adam first step from zero moments") {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(1);
  nn::AdamState<double> state(1, nn::AdamOptions{});
  nn::adam_step(w, Eigen::VectorXd(Eigen::VectorXd::Ones(1)), state);
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  CHECK(w[0] == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-14));
  CHECK(state.step == 1);

  Eigen::VectorXd u = Eigen::VectorXd::Constant(3, 0.25);
  nn::AdamState<double> fresh(3, nn::AdamOptions{});
  nn::adam_step(u, Eigen::VectorXd(Eigen::VectorXd::Zero(3)), fresh);
  CHECK(u == Eigen::VectorXd::Constant(3, 0.25));

  Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(4, -1, 1), b = a;
  nn::AdamState<double> sa(4, {}), sb(4, {});
  const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(4, 0.3, -0.7);
  nn::adam_step(a, g, sa);
  nn::adam_step(b, g, sb);
  CHECK(a == b);

  CHECK_THROWS_AS(nn::adam_step(a, Eigen::VectorXd(Eigen::VectorXd::Zero(3)), sa), ShapeError);
}

TEST_CASE("patience: improving only at epoch 1 stops at epoch 21") {
  nn::EarlyStopping stop(20);
  int epoch = 0;
  bool halted = false;
  while (!halted && epoch < 100) {
    ++epoch;
    halted = stop.update(epoch == 1 ? 1.0 : 2.0);
  }
  CHECK(epoch == 21);
  CHECK(stop.best_epoch() == 1);

  nn::EarlyStopping equal(3);
  CHECK_FALSE(equal.update(1.0));
  CHECK_FALSE(equal.update(1.0));
  CHECK_FALSE(equal.update(1.0));
  CHECK(equal.update(1.0));
}

TEST_CASE("validation mask picks a seeded tenth") {
  const auto m = nn::validation_mask(30, 0.1, 7);
  CHECK(std::count(m.begin(), m.end(), true) == 3);
  CHECK(m == nn::validation_mask(30, 0.1, 7));
  const auto small = nn::validation_mask(2, 0.1, 7);
  CHECK(std::count(small.begin(), small.end(), true) == 1);
}

TEST_CASE("training separates a toy health-state set") {
  const auto train_set = toy_hs_set(64, 1);
  const auto val_set = toy_hs_set(16, 2);
  nn::Network<double> net(toy_spec(Head::HealthState));
  net.initialize(5);
  nn::TrainConfig cfg;
  cfg.seed = 3;
  const auto result = nn::train(net, train_set, val_set, nn::Loss::BinaryCrossEntropy, cfg);
  CHECK(result.history.size() <= 100);
  int correct = 0;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    const double p = net.forward_one(train_set.inputs[i]);
    correct += (p > 0.5) == (train_set.targets[i] == 1.0);
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(train_set.size()) >= 0.95);
  CHECK(net.parameters() == result.best_parameters);
}

TEST_CASE("training is bit-identical for a fixed seed") {
  const auto train_set = toy_hs_set(40, 1);
  const auto val_set = toy_hs_set(8, 2);
  nn::TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.seed = 17;
  const auto once = [&] {
    nn::Network<double> net(toy_spec(Head::Rul));
    net.initialize(2);
    return nn::train(net, train_set, val_set, nn::Loss::MeanAbsoluteError, cfg);
  };
  const auto a = once(), b = once();
  CHECK(a.best_parameters == b.best_parameters);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].validation_loss == b.history[i].validation_loss);
  }
}

TEST_CASE("training rejects empty splits and bad configs") {
  nn::Network<double> net(toy_spec(Head::HealthState));
  const auto some = toy_hs_set(4, 1);
  CHECK_THROWS_AS(nn::train(net, nn::Dataset{}, some, nn::Loss::BinaryCrossEntropy, {}), ConfigError);
  CHECK_THROWS_AS(nn::train(net, some, nn::Dataset{}, nn::Loss::BinaryCrossEntropy, {}), ConfigError);
  nn::TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.validation_fraction = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

namespace {

nn::Checkpoint sample_checkpoint(int n_features) {
  auto spec = testing::tiny_spec(Head::Rul, n_features, 6);
  nn::Network<double> net(spec);
  net.initialize(8);
  nn::Checkpoint c;
  c.spec = spec;
  c.selection = dataio::FeatureSelection::first(n_features);
  for (const auto ch : c.selection.channels()) c.stats.channels.push_back({ch, 0.1 * static_cast<int>(ch), 1.5});
  c.window_step = 1;
  c.metadata = {{"seed", "4"}, {"stage", "rul"}};
  c.parameters = net.parameters();
  return c;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-identical") {
  testing::TempDir dir;
  const auto c = sample_checkpoint(4);
  nn::save_checkpoint(c, dir / "m.ckpt");
  const auto back = nn::load_checkpoint(dir / "m.ckpt");
  CHECK(back.spec == c.spec);
  CHECK(back.selection == c.selection);
  CHECK(back.stats == c.stats);
  CHECK(back.metadata == c.metadata);
  CHECK(back.window_step == c.window_step);
  CHECK(back.parameters == c.parameters);
  CHECK(nn::serialize_checkpoint(back) == nn::serialize_checkpoint(c));
}

TEST_CASE("corrupt checkpoints are refused") {
  const auto bytes = nn::serialize_checkpoint(sample_checkpoint(4));

  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  CHECK_THROWS_AS(nn::deserialize_checkpoint(truncated), LoadError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(nn::deserialize_checkpoint(trailing), LoadError);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(nn::deserialize_checkpoint(flipped), LoadError);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(nn::deserialize_checkpoint(magic), LoadError);

  auto version = bytes;
  version[14] = 2;
  CHECK_THROWS_AS(nn::deserialize_checkpoint(version), LoadError);

  testing::TempDir dir;
  std::ofstream(dir / "short.ckpt", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), 20);
  CHECK_THROWS_AS(nn::load_checkpoint(dir / "short.ckpt"), LoadError);
  CHECK_THROWS_AS(nn::load_checkpoint(dir / "missing.ckpt"), LoadError);
}

TEST_CASE("a 4-feature model refuses 7-feature windows") {
  struct Probe : StageModel {
    explicit Probe(const nn::Checkpoint& c) : StageModel(c, Head::Rul) {}
  };
  const Probe model(sample_checkpoint(4));
  windows::WindowSample w{"x", 1, 6, Eigen::MatrixXd::Zero(7, 6)};
  CHECK_THROWS_AS(model.predict(std::span<const windows::WindowSample>(&w, 1)), ShapeError);
  w.features = Eigen::MatrixXd::Zero(4, 6);
  CHECK(model.predict(std::span<const windows::WindowSample>(&w, 1)).size() == 1);
}
