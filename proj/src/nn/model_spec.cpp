#include "rul2stage/nn/model_spec.hpp"

#include "rul2stage/error.hpp"

namespace rul2stage::nn {

std::string_view head_name(Head head) {
  switch (head) {
    case Head::HealthState: return "hs";
    case Head::Rul: return "rul";
    case Head::Forecast: return "forecast";
  }
  throw ConfigError("invalid head");
}

Head head_from_name(std::string_view name) {
  if (name == "hs") return Head::HealthState;
  if (name == "rul") return Head::Rul;
  if (name == "forecast") return Head::Forecast;
  throw ConfigError("unknown head '" + std::string(name) + "'");
}

Activation head_activation(Head head) {
  switch (head) {
    case Head::HealthState: return Activation::Logistic;
    case Head::Rul: return Activation::Rectifier;
    case Head::Forecast: return Activation::Identity;
  }
  throw ConfigError("invalid head");
}

void ModelSpec::validate() const {
  const auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model ") + name + " must be >= 1, got " + std::to_string(v));
  };
  positive(n_steps, "n_steps");
  positive(step_dim, "step_dim");
  positive(hidden_size, "hidden_size");
  positive(layers_per_stack, "layers_per_stack");
  positive(n_stacks, "n_stacks");
  positive(dense_width, "dense_width");
}

std::string describe(const ModelSpec& s) {
  return "head=" + std::string(head_name(s.head)) + " input=" + std::to_string(s.n_steps) + "x" +
         std::to_string(s.step_dim) + " recurrent=" + std::to_string(s.n_stacks) + "x" +
         std::to_string(s.layers_per_stack) + "(hidden " + std::to_string(s.hidden_size) +
         ") dense=" + std::to_string(s.dense_width);
}

}  // namespace rul2stage::nn
