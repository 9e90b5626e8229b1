#include "rul2stage/dataio.hpp"

#include "rul2stage/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace rul2stage::dataio {

namespace {

constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "discharge_capacity", "charge_capacity", "internal_resistance", "charge_time",
    "temp_avg",           "temp_min",        "temp_max",
};

// File column order. Loaders match by header name, so this only fixes what
// save_cell_csv writes.
constexpr std::array<std::string_view, 8> kCsvColumns = {
    "cycle_index", "discharge_capacity", "charge_capacity", "internal_resistance",
    "temp_avg",    "temp_min",           "temp_max",        "charge_time",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string where(const std::filesystem::path& file, std::size_t line) {
  return file.string() + ":" + std::to_string(line);
}

}  // namespace

std::string_view channel_name(Channel channel) {
  return kChannelNames.at(static_cast<std::size_t>(channel));
}

Channel channel_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kChannelNames.size(); ++i) {
    if (kChannelNames[i] == name) return static_cast<Channel>(i);
  }
  throw ConfigError("unknown channel name '" + std::string(name) + "'");
}

double& CycleRecord::value(Channel channel) {
  switch (channel) {
    case Channel::DischargeCapacity: return discharge_capacity;
    case Channel::ChargeCapacity: return charge_capacity;
    case Channel::InternalResistance: return internal_resistance;
    case Channel::ChargeTime: return charge_time;
    case Channel::TempAvg: return temp_avg;
    case Channel::TempMin: return temp_min;
    case Channel::TempMax: return temp_max;
  }
  throw ConfigError("invalid channel");
}

double CycleRecord::value(Channel channel) const { return const_cast<CycleRecord&>(*this).value(channel); }

void validate_record(const CycleRecord& r) {
  const auto fail = [&](const std::string& what) {
    throw ValidationError("cycle " + std::to_string(r.cycle_index) + ": " + what);
  };
  if (r.cycle_index < 1) fail("cycle_index must be >= 1");
  for (const Channel c : kCanonicalOrder) {
    if (!std::isfinite(r.value(c))) fail(std::string(channel_name(c)) + " is not finite");
  }
  if (!(r.discharge_capacity > 0.0)) fail("discharge_capacity must be > 0");
  if (!(r.charge_capacity > 0.0)) fail("charge_capacity must be > 0");
  if (!(r.internal_resistance > 0.0)) fail("internal_resistance must be > 0");
  if (!(r.charge_time > 0.0)) fail("charge_time must be > 0");
  if (!(r.temp_min <= r.temp_avg && r.temp_avg <= r.temp_max)) {
    fail("temperatures must satisfy temp_min <= temp_avg <= temp_max");
  }
}

void CellHistory::validate() const {
  if (records.empty()) throw StructuralError("cell '" + cell_id + "' has no records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int expected = static_cast<int>(i) + 1;
    if (records[i].cycle_index != expected) {
      throw StructuralError("cell '" + cell_id + "': expected cycle_index " +
                            std::to_string(expected) + ", found " +
                            std::to_string(records[i].cycle_index));
    }
    try {
      validate_record(records[i]);
    } catch (const ValidationError& e) {
      throw ValidationError("cell '" + cell_id + "', " + e.what());
    }
  }
}

Eigen::MatrixXd CellHistory::channel_matrix(std::span<const Channel> channels) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(channels.size()), eol());
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      out(r, c) = records[static_cast<std::size_t>(c)].value(channels[static_cast<std::size_t>(r)]);
    }
  }
  return out;
}

FeatureSelection::FeatureSelection(std::vector<Channel> channels) : channels_(std::move(channels)) {
  if (channels_.empty()) throw ConfigError("feature selection must not be empty");
  std::sort(channels_.begin(), channels_.end());
  if (std::adjacent_find(channels_.begin(), channels_.end()) != channels_.end()) {
    throw ConfigError("feature selection contains duplicate channels");
  }
}

FeatureSelection FeatureSelection::first(int count) {
  if (count < 1 || count > kNumChannels) {
    throw ConfigError("feature count must be in 1..7, got " + std::to_string(count));
  }
  return FeatureSelection(std::vector<Channel>(kCanonicalOrder.begin(), kCanonicalOrder.begin() + count));
}

bool FeatureSelection::contains(Channel channel) const {
  return std::find(channels_.begin(), channels_.end(), channel) != channels_.end();
}

std::vector<std::string> FeatureSelection::names() const {
  std::vector<std::string> out;
  for (const Channel c : channels_) out.emplace_back(channel_name(c));
  return out;
}

const ChannelStats& NormalizationStats::at(Channel channel) const {
  for (const auto& s : channels) {
    if (s.channel == channel) return s;
  }
  throw ShapeError("normalization stats have no entry for channel '" +
                   std::string(channel_name(channel)) + "'");
}

bool NormalizationStats::has(Channel channel) const {
  return std::any_of(channels.begin(), channels.end(),
                     [&](const ChannelStats& s) { return s.channel == channel; });
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CellHistory load_cell_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open cell file " + file.string());

  CellHistory cell;
  cell.cell_id = file.stem().string();

  std::string line;
  std::size_t line_no = 0;
  std::array<int, 8> column_of{};  // kCsvColumns index -> position in file
  std::size_t n_columns = 0;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_commas(view);

    if (!have_header) {
      column_of.fill(-1);
      for (std::size_t i = 0; i < fields.size(); ++i) {
        for (std::size_t k = 0; k < kCsvColumns.size(); ++k) {
          if (fields[i] == kCsvColumns[k]) {
            if (column_of[k] != -1) {
              throw LoadError(where(file, line_no) + ": duplicate column '" +
                              std::string(fields[i]) + "'");
            }
            column_of[k] = static_cast<int>(i);
          }
        }
      }
      for (std::size_t k = 0; k < kCsvColumns.size(); ++k) {
        if (column_of[k] == -1) {
          throw LoadError(where(file, line_no) + ": missing column '" +
                          std::string(kCsvColumns[k]) + "'");
        }
      }
      n_columns = fields.size();
      have_header = true;
      continue;
    }

    if (fields.size() != n_columns) {
      throw LoadError(where(file, line_no) + ": expected " + std::to_string(n_columns) +
                      " fields, found " + std::to_string(fields.size()));
    }

    CycleRecord r;
    {
      const auto f = fields[static_cast<std::size_t>(column_of[0])];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), r.cycle_index);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw LoadError(where(file, line_no) + ": bad cycle_index '" + std::string(f) + "'");
      }
    }
    for (std::size_t k = 1; k < kCsvColumns.size(); ++k) {
      const auto f = fields[static_cast<std::size_t>(column_of[k])];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw LoadError(where(file, line_no) + ": bad number '" + std::string(f) + "' in column '" +
                        std::string(kCsvColumns[k]) + "'");
      }
      r.value(channel_from_name(kCsvColumns[k])) = v;
    }

    const int expected = static_cast<int>(cell.records.size()) + 1;
    if (r.cycle_index != expected) {
      throw StructuralError(where(file, line_no) + ": expected cycle_index " +
                            std::to_string(expected) + ", found " + std::to_string(r.cycle_index));
    }
    try {
      validate_record(r);
    } catch (const ValidationError& e) {
      throw ValidationError(where(file, line_no) + ": " + e.what());
    }
    cell.records.push_back(r);
  }

  if (!have_header) throw LoadError(file.string() + ": missing header");
  if (cell.records.empty()) throw StructuralError(file.string() + ": no cycle rows");
  return cell;
}

void save_cell_csv(const CellHistory& cell, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file.string());
  for (std::size_t k = 0; k < kCsvColumns.size(); ++k) {
    out << (k ? "," : "") << kCsvColumns[k];
  }
  out << '\n';
  for (const auto& r : cell.records) {
    out << r.cycle_index;
    for (std::size_t k = 1; k < kCsvColumns.size(); ++k) {
      out << ',' << format_double(r.value(channel_from_name(kCsvColumns[k])));
    }
    out << '\n';
  }
  if (!out) throw ConfigError("write failed for " + file.string());
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw LoadError("cannot open manifest " + manifest.string());
  std::vector<std::filesystem::path> entries;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    std::filesystem::path p{std::string(view)};
    if (p.is_relative()) p = manifest.parent_path() / p;
    entries.push_back(p);
  }
  return entries;
}

void write_manifest(const std::filesystem::path& manifest,
                    const std::vector<std::filesystem::path>& entries) {
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + manifest.string());
  for (const auto& e : entries) out << e.generic_string() << '\n';
  if (!out) throw ConfigError("write failed for " + manifest.string());
}

std::vector<CellHistory> load_cells(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw LoadError("no such file or directory: " + path.string());
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files = read_manifest(path);
  }
  std::vector<CellHistory> cells;
  cells.reserve(files.size());
  for (const auto& f : files) cells.push_back(load_cell_csv(f));
  return cells;
}

std::filesystem::path save_fleet(const std::vector<CellHistory>& cells,
                                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> entries;
  for (const auto& cell : cells) {
    const std::filesystem::path name = cell.cell_id + ".csv";
    save_cell_csv(cell, dir / name);
    entries.push_back(name);
  }
  const auto manifest = dir / "manifest.txt";
  write_manifest(manifest, entries);
  return manifest;
}

NormalizationStats compute_normalization(const std::vector<CellHistory>& cells,
                                         const FeatureSelection& selection) {
  if (cells.empty()) throw ConfigError("cannot compute normalization over zero cells");
  NormalizationStats stats;
  for (const Channel c : selection.channels()) {
    // Two-pass population statistics over the pooled cycles.
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& cell : cells) {
      for (const auto& r : cell.records) {
        sum += r.value(c);
        ++n;
      }
    }
    if (n == 0) throw ConfigError("cannot compute normalization over zero cycles");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& cell : cells) {
      for (const auto& r : cell.records) {
        const double d = r.value(c) - mean;
        ss += d * d;
      }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw ValidationError("channel '" + std::string(channel_name(c)) +
                            "' has zero variance over the training cells");
    }
    stats.channels.push_back({c, mean, sd});
  }
  return stats;
}

NormalizedCell apply_normalization(const CellHistory& cell, const NormalizationStats& stats,
                                   const FeatureSelection& selection) {
  NormalizedCell out{cell.cell_id, selection, cell.channel_matrix(selection.channels())};
  for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
    const auto& s = stats.at(selection.channels()[static_cast<std::size_t>(r)]);
    out.values.row(r) = (out.values.row(r).array() - s.mean) / s.std;
  }
  return out;
}

Eigen::MatrixXd denormalize(const NormalizedCell& cell, const NormalizationStats& stats) {
  Eigen::MatrixXd out = cell.values;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const auto& s = stats.at(cell.selection.channels()[static_cast<std::size_t>(r)]);
    out.row(r) = out.row(r).array() * s.std + s.mean;
  }
  return out;
}

TrainTestSplit split_train_test(const std::vector<CellHistory>& cells, int n_train,
                                std::uint64_t seed) {
  if (n_train < 1 || static_cast<std::size_t>(n_train) >= cells.size()) {
    throw ConfigError("n_train must be in 1.." + std::to_string(cells.size() ? cells.size() - 1 : 0) +
                      ", got " + std::to_string(n_train));
  }
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  TrainTestSplit split;
  for (const auto i : train_idx) split.train.push_back(cells[i]);
  for (const auto i : test_idx) split.test.push_back(cells[i]);
  return split;
}

}  // namespace rul2stage::dataio
