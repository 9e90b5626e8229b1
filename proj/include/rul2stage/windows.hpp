#ifndef RUL2STAGE_WINDOWS_HPP
#define RUL2STAGE_WINDOWS_HPP

#include "rul2stage/dataio.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rul2stage::windows {

inline constexpr int kDefaultWindow = 50;
inline constexpr int kDefaultStep = 1;
inline constexpr double kDefaultLabelFraction = 0.10;

/// A window of `length` consecutive cycles [start_cycle, anchor_cycle].
/// features(r, c) is selected channel r at cycle start_cycle + c.
struct WindowSample {
  std::string cell_id;
  int start_cycle = 1;
  int anchor_cycle = 1;
  Eigen::MatrixXd features;

  int length() const { return anchor_cycle - start_cycle + 1; }
};

enum class HsLabel { Healthy = 0, Unhealthy = 1, Unlabeled };

/// Number of windows a cell of `eol` cycles yields; 0 if eol < n_w.
int window_count(int eol, int n_w, int step);

std::vector<WindowSample> make_windows(const dataio::NormalizedCell& cell, int n_w = kDefaultWindow,
                                       int step = kDefaultStep);

/// Same cut over raw (unnormalized) channel values.
std::vector<WindowSample> make_windows(const dataio::CellHistory& cell,
                                       const dataio::FeatureSelection& selection,
                                       int n_w = kDefaultWindow, int step = kDefaultStep);

/// Last start cycle that still counts as healthy: ceil(p * eol).
int healthy_start_limit(int eol, double p);
/// First anchor cycle that counts as unhealthy: floor((1 - p) * eol).
int unhealthy_anchor_limit(int eol, double p);

/// Throws LabelingInfeasibleError when a window of length n_w could be both
/// healthy and unhealthy in a cell of `eol` cycles.
void check_labeling_feasible(int eol, int n_w, double p);

/// Healthy when the window starts inside the first p-fraction of life,
/// Unhealthy when it ends inside the last p-fraction, otherwise Unlabeled.
HsLabel hs_label(int start_cycle, int anchor_cycle, int eol, double p);

/// Labels aligned with `windows`. All windows must come from one cell.
std::vector<HsLabel> assign_hs_labels(std::span<const WindowSample> windows, int eol,
                                      double p = kDefaultLabelFraction);

/// (eol - anchor) / (eol - fpc).
double rul_fraction(int anchor_cycle, int eol, int fpc);

struct RulTarget {
  std::size_t window_index = 0;
  double fraction = 0.0;
};

/// Targets for every window with anchor >= fpc, in window order.
std::vector<RulTarget> assign_rul_targets(std::span<const WindowSample> windows, int eol, int fpc);

}  // namespace rul2stage::windows

#endif  // RUL2STAGE_WINDOWS_HPP
