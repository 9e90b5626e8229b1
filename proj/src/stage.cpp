#include "rul2stage/stage.hpp"

#include "rul2stage/error.hpp"

namespace rul2stage {

nn::ModelSpec StageOptions::model_spec(nn::Head head, int n_features) const {
  nn::ModelSpec spec;
  spec.head = head;
  spec.n_steps = n_features;
  spec.step_dim = window_length;
  spec.hidden_size = hidden_size;
  spec.layers_per_stack = layers_per_stack;
  spec.n_stacks = n_stacks;
  spec.dense_width = dense_width;
  spec.validate();
  return spec;
}

void StageOptions::validate() const {
  if (window_length < 1) throw ConfigError("window length must be >= 1");
  if (window_step < 1) throw ConfigError("window step must be >= 1");
  model_spec(nn::Head::HealthState, 1);
  train.validate();
}

StageModel::StageModel(nn::Network<double> network, dataio::FeatureSelection selection,
                       dataio::NormalizationStats stats, int window_step)
    : network_(std::move(network)),
      selection_(std::move(selection)),
      stats_(std::move(stats)),
      window_step_(window_step) {
  if (selection_.size() != network_.spec().n_steps) {
    throw ShapeError("model has " + std::to_string(network_.spec().n_steps) + " input steps but " +
                     std::to_string(selection_.size()) + " selected features");
  }
  for (const auto c : selection_.channels()) stats_.at(c);
}

StageModel::StageModel(const nn::Checkpoint& checkpoint, nn::Head expected)
    : StageModel(nn::network_from(checkpoint), checkpoint.selection, checkpoint.stats,
                 checkpoint.window_step) {
  if (checkpoint.spec.head != expected) {
    throw ConfigError("checkpoint holds a '" + std::string(nn::head_name(checkpoint.spec.head)) +
                      "' model, expected '" + std::string(nn::head_name(expected)) + "'");
  }
}

std::vector<windows::WindowSample> StageModel::windows_for(const dataio::CellHistory& cell) const {
  const auto normalized = dataio::apply_normalization(cell, stats_, selection_);
  return windows::make_windows(normalized, window_length(), window_step_);
}

void StageModel::check_window(const windows::WindowSample& w) const {
  if (w.features.rows() != selection_.size() || w.features.cols() != window_length()) {
    throw ShapeError("window '" + w.cell_id + "'@" + std::to_string(w.anchor_cycle) + " is " +
                     std::to_string(w.features.rows()) + "x" + std::to_string(w.features.cols()) +
                     ", model expects " + std::to_string(selection_.size()) + "x" +
                     std::to_string(window_length()));
  }
}

std::vector<double> StageModel::predict(std::span<const windows::WindowSample> samples) const {
  std::vector<const Eigen::MatrixXd*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& w : samples) {
    check_window(w);
    ptrs.push_back(&w.features);
  }
  return nn::predict<double, Eigen::MatrixXd>(network_, std::span<const Eigen::MatrixXd* const>(ptrs));
}

nn::Checkpoint StageModel::to_checkpoint(std::vector<std::pair<std::string, std::string>> metadata) const {
  nn::Checkpoint c;
  c.spec = network_.spec();
  c.selection = selection_;
  c.stats = stats_;
  c.window_step = window_step_;
  c.metadata = std::move(metadata);
  c.parameters = network_.parameters();
  return c;
}

void require_compatible(const StageModel& a, const StageModel& b) {
  if (!(a.selection() == b.selection())) throw ShapeError("models use different feature selections");
  for (const auto c : a.selection().channels()) {
    if (!(a.stats().at(c) == b.stats().at(c))) throw ShapeError("models use different normalization stats");
  }
  if (a.window_length() != b.window_length() || a.window_step() != b.window_step()) {
    throw ShapeError("models use different window settings");
  }
}

}  // namespace rul2stage
