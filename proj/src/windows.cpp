#include "rul2stage/windows.hpp"

#include "rul2stage/error.hpp"

#include <cmath>

namespace rul2stage::windows {

namespace {

// p * eol is computed in floating point; 0.1 * 120 lands a hair above 12.
constexpr double kRoundingSlack = 1e-9;

void check_window_args(int n_w, int step) {
  if (n_w < 1) throw ConfigError("window length must be >= 1");
  if (step < 1) throw ConfigError("window step must be >= 1");
}

std::vector<WindowSample> cut(const std::string& cell_id, const Eigen::MatrixXd& values, int n_w,
                              int step) {
  check_window_args(n_w, step);
  const int eol = static_cast<int>(values.cols());
  if (eol < n_w) {
    throw CellTooShortError("cell '" + cell_id + "' has " + std::to_string(eol) +
                            " cycles, shorter than the window length " + std::to_string(n_w));
  }
  std::vector<WindowSample> out;
  out.reserve(static_cast<std::size_t>(window_count(eol, n_w, step)));
  for (int s = 1; s + n_w - 1 <= eol; s += step) {
    out.push_back({cell_id, s, s + n_w - 1, values.middleCols(s - 1, n_w)});
  }
  return out;
}

}  // namespace

int window_count(int eol, int n_w, int step) {
  check_window_args(n_w, step);
  if (eol < n_w) return 0;
  return (eol - n_w) / step + 1;
}

std::vector<WindowSample> make_windows(const dataio::NormalizedCell& cell, int n_w, int step) {
  return cut(cell.cell_id, cell.values, n_w, step);
}

std::vector<WindowSample> make_windows(const dataio::CellHistory& cell,
                                       const dataio::FeatureSelection& selection, int n_w, int step) {
  return cut(cell.cell_id, cell.channel_matrix(selection.channels()), n_w, step);
}

int healthy_start_limit(int eol, double p) {
  return static_cast<int>(std::ceil(p * eol - kRoundingSlack));
}

int unhealthy_anchor_limit(int eol, double p) {
  return static_cast<int>(std::floor((1.0 - p) * eol + kRoundingSlack));
}

void check_labeling_feasible(int eol, int n_w, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("label fraction p must lie in (0, 1)");
  if (healthy_start_limit(eol, p) + n_w - 1 >= unhealthy_anchor_limit(eol, p)) {
    throw LabelingInfeasibleError("eol " + std::to_string(eol) + " with window " +
                                  std::to_string(n_w) + " and p " + std::to_string(p) +
                                  " makes healthy and unhealthy windows overlap");
  }
}

HsLabel hs_label(int start_cycle, int anchor_cycle, int eol, double p) {
  const bool healthy = start_cycle <= healthy_start_limit(eol, p);
  const bool unhealthy = anchor_cycle >= unhealthy_anchor_limit(eol, p);
  if (healthy && unhealthy) {
    throw LabelingInfeasibleError("window " + std::to_string(start_cycle) + ".." +
                                  std::to_string(anchor_cycle) + " is both healthy and unhealthy");
  }
  if (healthy) return HsLabel::Healthy;
  if (unhealthy) return HsLabel::Unhealthy;
  return HsLabel::Unlabeled;
}

std::vector<HsLabel> assign_hs_labels(std::span<const WindowSample> windows, int eol, double p) {
  std::vector<HsLabel> labels;
  if (windows.empty()) return labels;
  const std::string& cell_id = windows.front().cell_id;
  const int n_w = windows.front().length();
  try {
    check_labeling_feasible(eol, n_w, p);
  } catch (const LabelingInfeasibleError& e) {
    throw LabelingInfeasibleError("cell '" + cell_id + "': " + e.what());
  }
  labels.reserve(windows.size());
  for (const auto& w : windows) {
    if (w.cell_id != cell_id) throw ConfigError("assign_hs_labels: windows span several cells");
    if (w.anchor_cycle > eol) throw ConfigError("window anchor beyond eol");
    labels.push_back(hs_label(w.start_cycle, w.anchor_cycle, eol, p));
  }
  return labels;
}

double rul_fraction(int anchor_cycle, int eol, int fpc) {
  if (fpc >= eol) {
    throw ConfigError("fpc (" + std::to_string(fpc) + ") must be before eol (" +
                      std::to_string(eol) + ")");
  }
  return static_cast<double>(eol - anchor_cycle) / static_cast<double>(eol - fpc);
}

std::vector<RulTarget> assign_rul_targets(std::span<const WindowSample> windows, int eol, int fpc) {
  if (fpc >= eol) {
    throw ConfigError("fpc (" + std::to_string(fpc) + ") must be before eol (" +
                      std::to_string(eol) + ")");
  }
  std::vector<RulTarget> out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const int t = windows[i].anchor_cycle;
    if (t < fpc) continue;
    if (t > eol) throw ConfigError("window anchor beyond eol");
    out.push_back({i, rul_fraction(t, eol, fpc)});
  }
  return out;
}

}  // namespace rul2stage::windows
