#include "rul2stage/synthgen.hpp"

#include "rul2stage/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace rul2stage::synth {

namespace {

constexpr double kEolFade = 0.20;        // life ends at 80% of nominal
constexpr double kTempWobbleStd = 0.2;   // degC
constexpr double kChargeCapacityRatio = 1.004;
constexpr double kFloor = 1e-6;

// Gaussian noise truncated to +-3 sigma.
class ClippedNoise {
 public:
  explicit ClippedNoise(std::uint64_t seed) : rng_(seed) {}

  double operator()(double sigma) {
    if (sigma <= 0.0) return 0.0;
    const double z = std::clamp(normal_(rng_), -3.0, 3.0);
    return sigma * z;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

double DegradationParams::post_knee_fade() const {
  return kEolFade - pre_knee_fade_per_cycle * static_cast<double>(eol - 1);
}

double DegradationParams::knee_cycle() const {
  return 1.0 + knee_fraction * static_cast<double>(eol - 1);
}

void DegradationParams::validate() const {
  require(eol >= 60, "eol must be >= 60, got " + std::to_string(eol));
  require(nominal_capacity > 0.0, "nominal_capacity must be > 0");
  require(knee_fraction > 0.0 && knee_fraction < 1.0, "knee_fraction must lie in (0, 1)");
  require(pre_knee_fade_per_cycle >= 0.0, "pre_knee_fade_per_cycle must be >= 0");
  require(post_knee_exponent >= 1.0, "post_knee_exponent must be >= 1");
  require(capacity_noise_std >= 0.0, "capacity_noise_std must be >= 0");
  require(resistance_initial > 0.0, "resistance_initial must be > 0");
  require(resistance_growth >= 0.0, "resistance_growth must be >= 0");
  require(temp_spread >= 0.0, "temp_spread must be >= 0");
  require(charge_time_base > 0.0, "charge_time_base must be > 0");
  require(charge_time_drift > -1.0, "charge_time_drift must be > -1");
  require(std::isfinite(temp_base), "temp_base must be finite");
  require(post_knee_fade() > 0.0,
          "pre-knee fade of " + std::to_string(pre_knee_fade_per_cycle) + "/cycle over " +
              std::to_string(eol) + " cycles exhausts the 20% fade budget before the knee");
}

double fade_fraction(const DegradationParams& p, double cycle) {
  const double span = static_cast<double>(p.eol - 1);
  const double u = (cycle - 1.0) / span;
  double fade = p.pre_knee_fade_per_cycle * (cycle - 1.0);
  if (u > p.knee_fraction) {
    const double w = (u - p.knee_fraction) / (1.0 - p.knee_fraction);
    fade += p.post_knee_fade() * std::pow(w, p.post_knee_exponent);
  }
  return fade;
}

std::vector<double> capacity_trend(const DegradationParams& params) {
  params.validate();
  std::vector<double> out(static_cast<std::size_t>(params.eol));
  for (int c = 1; c <= params.eol; ++c) {
    out[static_cast<std::size_t>(c - 1)] = params.nominal_capacity * (1.0 - fade_fraction(params, c));
  }
  // Pin the endpoints exactly; pow() rounding would otherwise leave ulps.
  out.front() = params.nominal_capacity;
  out.back() = params.nominal_capacity * (1.0 - kEolFade);
  return out;
}

dataio::CellHistory generate_cell(const DegradationParams& params) {
  const auto trend = capacity_trend(params);
  ClippedNoise noise(params.rng_seed);

  const double rel_sigma = params.capacity_noise_std / params.nominal_capacity;
  dataio::CellHistory cell;
  cell.cell_id = params.cell_id;
  cell.records.reserve(trend.size());
  for (int c = 1; c <= params.eol; ++c) {
    const double capacity = trend[static_cast<std::size_t>(c - 1)];
    const double wear = fade_fraction(params, c) / kEolFade;  // 0 at start, ~1 at EOL

    dataio::CycleRecord r;
    r.cycle_index = c;
    r.discharge_capacity = std::max(capacity + noise(params.capacity_noise_std), kFloor);
    r.charge_capacity =
        std::max(capacity * kChargeCapacityRatio + noise(params.capacity_noise_std), kFloor);
    const double resistance = params.resistance_initial * (1.0 + params.resistance_growth * wear);
    r.internal_resistance = std::max(resistance + noise(resistance * rel_sigma), kFloor);
    const double charge_time = params.charge_time_base * (1.0 + params.charge_time_drift * wear);
    r.charge_time = std::max(charge_time + noise(charge_time * rel_sigma), kFloor);
    r.temp_avg = params.temp_base + noise(kTempWobbleStd);
    r.temp_min = r.temp_avg - params.temp_spread;
    r.temp_max = r.temp_avg + params.temp_spread;
    cell.records.push_back(r);
  }
  return cell;
}

void FleetSpec::validate() const {
  require(n_cells >= 0, "n_cells must be >= 0");
  require(eol_min >= 60 && eol_max <= 3000 && eol_min <= eol_max,
          "eol range must satisfy 60 <= eol_min <= eol_max <= 3000");
  const auto check = [](const Range& r, const char* name) {
    require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi,
            std::string("range '") + name + "' must satisfy lo <= hi");
  };
  check(nominal_capacity, "nominal_capacity");
  check(knee_fraction, "knee_fraction");
  check(pre_knee_share, "pre_knee_share");
  check(post_knee_exponent, "post_knee_exponent");
  check(capacity_noise_std, "capacity_noise_std");
  check(resistance_initial, "resistance_initial");
  check(resistance_growth, "resistance_growth");
  check(temp_base, "temp_base");
  check(temp_spread, "temp_spread");
  check(charge_time_base, "charge_time_base");
  check(charge_time_drift, "charge_time_drift");
  require(pre_knee_share.lo >= 0.0 && pre_knee_share.hi < 1.0, "pre_knee_share must lie in [0, 1)");
  require(knee_fraction.lo > 0.0 && knee_fraction.hi < 1.0, "knee_fraction must lie in (0, 1)");
}

std::vector<DegradationParams> sample_fleet_params(const FleetSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.master_seed);
  const auto uniform = [&](const Range& r) {
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  };

  std::vector<DegradationParams> out;
  out.reserve(static_cast<std::size_t>(spec.n_cells));
  for (int i = 0; i < spec.n_cells; ++i) {
    DegradationParams p;
    char id[64];
    std::snprintf(id, sizeof id, "%s_%03d", spec.id_prefix.c_str(), i);
    p.cell_id = id;
    p.eol = std::uniform_int_distribution<int>(spec.eol_min, spec.eol_max)(rng);
    p.nominal_capacity = uniform(spec.nominal_capacity);
    p.knee_fraction = uniform(spec.knee_fraction);
    p.pre_knee_fade_per_cycle = uniform(spec.pre_knee_share) * kEolFade / static_cast<double>(p.eol - 1);
    p.post_knee_exponent = uniform(spec.post_knee_exponent);
    p.capacity_noise_std = uniform(spec.capacity_noise_std);
    p.resistance_initial = uniform(spec.resistance_initial);
    p.resistance_growth = uniform(spec.resistance_growth);
    p.temp_base = uniform(spec.temp_base);
    p.temp_spread = uniform(spec.temp_spread);
    p.charge_time_base = uniform(spec.charge_time_base);
    p.charge_time_drift = uniform(spec.charge_time_drift);
    p.rng_seed = rng();
    out.push_back(p);
  }
  return out;
}

std::vector<dataio::CellHistory> generate_fleet(const FleetSpec& spec) {
  std::vector<dataio::CellHistory> cells;
  for (const auto& p : sample_fleet_params(spec)) cells.push_back(generate_cell(p));
  return cells;
}

}  // namespace rul2stage::synth
