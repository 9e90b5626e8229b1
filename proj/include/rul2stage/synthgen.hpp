#ifndef RUL2STAGE_SYNTHGEN_HPP
#define RUL2STAGE_SYNTHGEN_HPP

#include "rul2stage/dataio.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rul2stage::synth {

/// Shape of one synthetic cell's degradation. Capacity fades linearly before
/// the knee and picks up an extra power-law term after it; life ends when the
/// noiseless discharge capacity reaches 80% of nominal.
struct DegradationParams {
  std::string cell_id = "cell";
  int eol = 500;
  double nominal_capacity = 1.1;          // Ah
  double knee_fraction = 0.7;             // (0, 1)
  double pre_knee_fade_per_cycle = 2e-5;  // fraction of nominal per cycle
  double post_knee_exponent = 2.0;        // >= 1
  double capacity_noise_std = 0.0;        // Ah
  double resistance_initial = 0.016;      // Ohm
  double resistance_growth = 0.25;        // relative growth at EOL
  double temp_base = 30.0;                // degC
  double temp_spread = 2.0;               // degC
  double charge_time_base = 10.0;         // minutes
  double charge_time_drift = 0.05;        // relative change at EOL
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError for out-of-range fields or a fade budget that cannot
  /// reach the 80% endpoint with a positive post-knee term.
  void validate() const;

  /// Total fraction of nominal capacity lost to the post-knee term.
  double post_knee_fade() const;

  /// First cycle after which the fade rate accelerates.
  double knee_cycle() const;
};

/// Noiseless fraction of nominal capacity lost by `cycle` (1-based).
double fade_fraction(const DegradationParams& params, double cycle);

/// Noiseless discharge-capacity trend over cycles 1..eol.
std::vector<double> capacity_trend(const DegradationParams& params);

dataio::CellHistory generate_cell(const DegradationParams& params);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct FleetSpec {
  int n_cells = 30;
  std::uint64_t master_seed = 1;
  int eol_min = 150;
  int eol_max = 1200;
  Range nominal_capacity{1.06, 1.10};
  Range knee_fraction{0.55, 0.75};
  /// Pre-knee fade is drawn as a share of the 20% fade budget and then
  /// converted to a per-cycle rate for the sampled EOL.
  Range pre_knee_share{0.10, 0.30};
  Range post_knee_exponent{1.5, 2.5};
  Range capacity_noise_std{0.001, 0.002};
  Range resistance_initial{0.014, 0.018};
  Range resistance_growth{0.15, 0.35};
  Range temp_base{29.5, 30.5};
  Range temp_spread{1.5, 3.0};
  Range charge_time_base{9.5, 11.0};
  Range charge_time_drift{0.02, 0.10};
  std::string id_prefix = "cell";

  void validate() const;
};

/// Samples per-cell parameters from `spec` with a generator seeded by
/// `master_seed`, in cell order.
std::vector<DegradationParams> sample_fleet_params(const FleetSpec& spec);

std::vector<dataio::CellHistory> generate_fleet(const FleetSpec& spec);

}  // namespace rul2stage::synth

#endif  // RUL2STAGE_SYNTHGEN_HPP
