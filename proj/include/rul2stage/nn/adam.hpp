#ifndef RUL2STAGE_NN_ADAM_HPP
#define RUL2STAGE_NN_ADAM_HPP

#include "rul2stage/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace rul2stage::nn {

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;

  friend bool operator==(const AdamOptions&, const AdamOptions&) = default;
};

/// First/second moment estimates mirroring a flat parameter vector.
template <typename Scalar>
struct AdamState {
  using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  AdamOptions options;
  VectorT m;
  VectorT v;
  std::int64_t step = 0;

  AdamState() = default;
  AdamState(Eigen::Index n, AdamOptions opts)
      : options(opts), m(VectorT::Zero(n)), v(VectorT::Zero(n)) {}
};

/// One bias-corrected Adam update of `params` in place.
template <typename Scalar>
void adam_step(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& params,
               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grads, AdamState<Scalar>& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient, and moment sizes differ");
  }
  const auto& o = state.options;
  ++state.step;
  const Scalar b1 = static_cast<Scalar>(o.beta1);
  const Scalar b2 = static_cast<Scalar>(o.beta2);
  state.m = b1 * state.m + (Scalar(1) - b1) * grads;
  state.v = b2 * state.v + (Scalar(1) - b2) * grads.cwiseAbs2();
  const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(state.step));
  const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(state.step));
  const Scalar lr = static_cast<Scalar>(o.learning_rate);
  const Scalar eps = static_cast<Scalar>(o.epsilon);
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

}  // namespace rul2stage::nn

#endif  // RUL2STAGE_NN_ADAM_HPP
