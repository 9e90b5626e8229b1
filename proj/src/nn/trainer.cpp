#include "rul2stage/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rul2stage::nn {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

bool EarlyStopping::update(double validation_loss) {
  ++epochs_;
  last_improved_ = epochs_ == 1 || validation_loss < best_;
  if (last_improved_) {
    best_ = validation_loss;
    best_epoch_ = epochs_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  return since_best_ >= patience_;
}

namespace {

constexpr std::size_t kEvalChunk = 64;

std::vector<const Eigen::MatrixXd*> pointers(const Dataset& data, std::span<const std::size_t> idx) {
  std::vector<const Eigen::MatrixXd*> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(&data.inputs[i]);
  return out;
}

}  // namespace

double evaluate_loss(const Network<double>& net, const Dataset& data, Loss loss) {
  if (data.empty()) throw ConfigError("cannot evaluate loss on an empty dataset");
  std::vector<const Eigen::MatrixXd*> ptrs;
  for (const auto& x : data.inputs) ptrs.push_back(&x);
  const auto preds = predict<double, Eigen::MatrixXd>(net, std::span<const Eigen::MatrixXd* const>(ptrs), kEvalChunk);
  const double value = batch_loss(loss, preds, data.targets).value;
  if (!std::isfinite(value)) throw NumericError("non-finite validation loss");
  return value;
}

TrainResult train(Network<double>& net, const Dataset& train_set, const Dataset& validation_set,
                  Loss loss, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (validation_set.empty()) throw ConfigError("validation set is empty");

  const auto& spec = net.spec();
  AdamState<double> adam(net.num_parameters(), config.adam);
  EarlyStopping stopper(config.patience);

  TrainResult result;
  result.best_parameters = net.parameters();

  std::vector<std::size_t> order(train_set.size());
  ForwardCache<double> cache;
  std::vector<double> batch_targets;
  std::vector<double> batch_preds;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t from = 0; from < order.size(); from += static_cast<std::size_t>(config.batch_size)) {
      const auto idx = std::span<const std::size_t>(order).subspan(
          from, std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), order.size() - from));
      const auto ptrs = pointers(train_set, idx);
      const auto packed = pack_batch<double, Eigen::MatrixXd>(std::span<const Eigen::MatrixXd* const>(ptrs),
                                                             spec.n_steps, spec.step_dim);
      const auto out = net.forward(packed, static_cast<Eigen::Index>(idx.size()), &cache);

      batch_preds.assign(out.data(), out.data() + out.size());
      batch_targets.clear();
      for (const auto i : idx) batch_targets.push_back(train_set.targets[i]);
      const auto l = batch_loss(loss, batch_preds, batch_targets);
      if (!std::isfinite(l.value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      loss_sum += l.value * static_cast<double>(idx.size());

      const Eigen::RowVectorXd upstream = Eigen::Map<const Eigen::RowVectorXd>(
          l.gradient.data(), static_cast<Eigen::Index>(l.gradient.size()));
      Eigen::VectorXd grad = net.backward(cache, upstream);
      if (!grad.allFinite()) throw NumericError("non-finite gradient at epoch " + std::to_string(epoch));
      if (config.clip_norm > 0.0) {
        const double norm = grad.norm();
        if (norm > config.clip_norm) grad *= config.clip_norm / norm;
      }
      adam_step(net.mutable_parameters(), grad, adam);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train_set.size());
    record.validation_loss = evaluate_loss(net, validation_set, loss);
    const bool stop = stopper.update(record.validation_loss);
    record.improved = stopper.last_improved();
    if (record.improved) result.best_parameters = net.parameters();
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (stop) {
      result.stopped_early = epoch < config.max_epochs;
      break;
    }
  }

  result.best_epoch = stopper.best_epoch();
  result.best_validation_loss = stopper.best_loss();
  net.set_parameters(result.best_parameters);
  return result;
}

std::vector<bool> validation_mask(std::size_t n, double fraction, std::uint64_t seed) {
  if (n < 2) throw ConfigError("need at least two items to carve out a validation split");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < k; ++i) mask[order[i]] = true;
  return mask;
}

}  // namespace rul2stage::nn
