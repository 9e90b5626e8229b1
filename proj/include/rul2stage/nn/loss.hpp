#ifndef RUL2STAGE_NN_LOSS_HPP
#define RUL2STAGE_NN_LOSS_HPP

#include "rul2stage/error.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace rul2stage::nn {

enum class Loss { BinaryCrossEntropy, MeanAbsoluteError, MeanSquaredError };

inline constexpr double kBceClamp = 1e-12;

struct ScalarLoss {
  double value = 0.0;
  double gradient = 0.0;  // d value / d prediction
};

/// -[y log p + (1 - y) log(1 - p)] with p clamped to [1e-12, 1 - 1e-12].
inline ScalarLoss bce_loss(double prediction, double label) {
  if (label != 0.0 && label != 1.0) {
    throw ConfigError("binary cross entropy label must be 0 or 1, got " + std::to_string(label));
  }
  const double p = std::clamp(prediction, kBceClamp, 1.0 - kBceClamp);
  if (label == 1.0) return {-std::log(p), -1.0 / p};
  return {-std::log(1.0 - p), 1.0 / (1.0 - p)};
}

struct VectorLoss {
  double value = 0.0;
  std::vector<double> gradient;
};

namespace detail {
inline void check_pair(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty()) throw ConfigError("loss over an empty batch");
  if (predictions.size() != targets.size()) throw ShapeError("prediction and target counts differ");
}
}  // namespace detail

/// Mean |y - yhat| with subgradient sign(yhat - y) / n, zero at ties.
inline VectorLoss mae_loss(std::span<const double> predictions, std::span<const double> targets) {
  detail::check_pair(predictions, targets);
  const double n = static_cast<double>(predictions.size());
  VectorLoss out{0.0, std::vector<double>(predictions.size())};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    out.value += std::abs(d);
    out.gradient[i] = (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) / n;
  }
  out.value /= n;
  return out;
}

inline VectorLoss mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  detail::check_pair(predictions, targets);
  const double n = static_cast<double>(predictions.size());
  VectorLoss out{0.0, std::vector<double>(predictions.size())};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    out.value += d * d;
    out.gradient[i] = 2.0 * d / n;
  }
  out.value /= n;
  return out;
}

/// Batch-mean BCE.
inline VectorLoss mean_bce_loss(std::span<const double> predictions, std::span<const double> labels) {
  detail::check_pair(predictions, labels);
  const double n = static_cast<double>(predictions.size());
  VectorLoss out{0.0, std::vector<double>(predictions.size())};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto l = bce_loss(predictions[i], labels[i]);
    out.value += l.value;
    out.gradient[i] = l.gradient / n;
  }
  out.value /= n;
  return out;
}

inline VectorLoss batch_loss(Loss loss, std::span<const double> predictions, std::span<const double> targets) {
  switch (loss) {
    case Loss::BinaryCrossEntropy: return mean_bce_loss(predictions, targets);
    case Loss::MeanAbsoluteError: return mae_loss(predictions, targets);
    case Loss::MeanSquaredError: return mse_loss(predictions, targets);
  }
  throw ConfigError("invalid loss");
}

}  // namespace rul2stage::nn

#endif  // RUL2STAGE_NN_LOSS_HPP
