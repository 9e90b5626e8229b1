#ifndef RUL2STAGE_NN_TRAINER_HPP
#define RUL2STAGE_NN_TRAINER_HPP

#include "rul2stage/nn/adam.hpp"
#include "rul2stage/nn/loss.hpp"
#include "rul2stage/nn/network.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace rul2stage::nn {

/// Inputs (n_steps x step_dim) with one scalar target each.
struct Dataset {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<double> targets;

  void add(Eigen::MatrixXd input, double target) {
    inputs.push_back(std::move(input));
    targets.push_back(target);
  }
  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
};

struct TrainConfig {
  int batch_size = 8;
  int max_epochs = 100;
  int patience = 20;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // <= 0 disables clipping
  AdamOptions adam;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  bool improved = false;
};

struct TrainResult {
  Eigen::VectorXd best_parameters;
  int best_epoch = 0;
  double best_validation_loss = 0.0;
  bool stopped_early = false;
  std::vector<EpochRecord> history;
};

/// Patience counter over per-epoch validation losses. Strict decrease
/// counts as improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  /// Records the next epoch; returns true when training should stop.
  bool update(double validation_loss);

  bool last_improved() const { return last_improved_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }
  int epochs_seen() const { return epochs_; }

 private:
  int patience_;
  int epochs_ = 0;
  int best_epoch_ = 0;
  int since_best_ = 0;
  double best_ = 0.0;
  bool last_improved_ = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mean loss over a dataset, evaluated in chunks.
double evaluate_loss(const Network<double>& net, const Dataset& data, Loss loss);

/// Mini-batch Adam with a per-epoch seeded shuffle and early stopping on the
/// validation loss. Leaves the best-validation parameters in `net`.
TrainResult train(Network<double>& net, const Dataset& train_set, const Dataset& validation_set,
                  Loss loss, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Marks round(n * fraction) of n items (at least one, at most n - 1) for
/// validation with a seeded shuffle.
std::vector<bool> validation_mask(std::size_t n, double fraction, std::uint64_t seed);

}  // namespace rul2stage::nn

#endif  // RUL2STAGE_NN_TRAINER_HPP
