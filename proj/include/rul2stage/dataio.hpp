#ifndef RUL2STAGE_DATAIO_HPP
#define RUL2STAGE_DATAIO_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rul2stage::dataio {

/// Measurement channels recorded per cycle. Enumerator order is the
/// canonical feature order used for selections and ablations.
enum class Channel : int {
  DischargeCapacity = 0,
  ChargeCapacity,
  InternalResistance,
  ChargeTime,
  TempAvg,
  TempMin,
  TempMax,
};

inline constexpr int kNumChannels = 7;

inline constexpr std::array<Channel, kNumChannels> kCanonicalOrder = {
    Channel::DischargeCapacity, Channel::ChargeCapacity, Channel::InternalResistance,
    Channel::ChargeTime,        Channel::TempAvg,        Channel::TempMin,
    Channel::TempMax,
};

std::string_view channel_name(Channel channel);
Channel channel_from_name(std::string_view name);

struct CycleRecord {
  int cycle_index = 0;
  double discharge_capacity = 0.0;  // Ah
  double charge_capacity = 0.0;     // Ah
  double internal_resistance = 0.0; // Ohm
  double temp_avg = 0.0;            // degC
  double temp_min = 0.0;
  double temp_max = 0.0;
  double charge_time = 0.0;         // minutes

  double value(Channel channel) const;
  double& value(Channel channel);
};

/// Throws ValidationError describing the first violated record invariant.
void validate_record(const CycleRecord& record);

/// One cell's cycle log. Records are contiguous from cycle 1 to EOL.
struct CellHistory {
  std::string cell_id;
  std::vector<CycleRecord> records;

  int eol() const { return static_cast<int>(records.size()); }

  /// Checks ordering, contiguity, and per-record invariants.
  void validate() const;

  /// Raw channel values as a (channels x cycles) matrix.
  Eigen::MatrixXd channel_matrix(std::span<const Channel> channels) const;
};

/// Ordered subset of channels; always kept in canonical order.
class FeatureSelection {
 public:
  FeatureSelection() = default;
  explicit FeatureSelection(std::vector<Channel> channels);

  /// First `count` channels of the canonical order (1..7).
  static FeatureSelection first(int count);
  static FeatureSelection all() { return first(kNumChannels); }

  const std::vector<Channel>& channels() const { return channels_; }
  int size() const { return static_cast<int>(channels_.size()); }
  bool contains(Channel channel) const;
  std::vector<std::string> names() const;

  friend bool operator==(const FeatureSelection&, const FeatureSelection&) = default;

 private:
  std::vector<Channel> channels_;
};

struct ChannelStats {
  Channel channel;
  double mean = 0.0;
  double std = 1.0;

  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

/// Per-channel z-score parameters, population standard deviation.
struct NormalizationStats {
  std::vector<ChannelStats> channels;

  const ChannelStats& at(Channel channel) const;
  bool has(Channel channel) const;

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

/// A cell restricted to a feature selection, values z-scored.
/// values(r, c) is selected channel r at cycle c + 1.
struct NormalizedCell {
  std::string cell_id;
  FeatureSelection selection;
  Eigen::MatrixXd values;

  int eol() const { return static_cast<int>(values.cols()); }
};

CellHistory load_cell_csv(const std::filesystem::path& file);
void save_cell_csv(const CellHistory& cell, const std::filesystem::path& file);

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest,
                    const std::vector<std::filesystem::path>& entries);

/// Loads a fleet. `path` is either a manifest file (one CSV path per line,
/// relative to the manifest's directory) or a directory, in which case every
/// `*.csv` inside is loaded in lexicographic order.
std::vector<CellHistory> load_cells(const std::filesystem::path& path);

/// Writes one `<cell_id>.csv` per cell plus `manifest.txt` into `dir`.
/// Returns the manifest path.
std::filesystem::path save_fleet(const std::vector<CellHistory>& cells,
                                 const std::filesystem::path& dir);

NormalizationStats compute_normalization(const std::vector<CellHistory>& cells,
                                         const FeatureSelection& selection);

NormalizedCell apply_normalization(const CellHistory& cell, const NormalizationStats& stats,
                                   const FeatureSelection& selection);

/// Inverse of the z-score for a normalized value matrix.
Eigen::MatrixXd denormalize(const NormalizedCell& cell, const NormalizationStats& stats);

struct TrainTestSplit {
  std::vector<CellHistory> train;
  std::vector<CellHistory> test;
};

/// Seeded shuffle, then the first `n_train` cells train. Both partitions keep
/// the input order of their members.
TrainTestSplit split_train_test(const std::vector<CellHistory>& cells, int n_train,
                                std::uint64_t seed);

/// Round-trip decimal text for a double (17 significant digits).
std::string format_double(double value);

}  // namespace rul2stage::dataio

#endif  // RUL2STAGE_DATAIO_HPP
