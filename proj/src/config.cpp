#include "rul2stage/config.hpp"

#include "rul2stage/error.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rul2stage::config {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
std::optional<T> parse_integer(std::string_view s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(std::string_view s) {
  if (s.empty()) return std::nullopt;
  const std::string buf(s);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text, const std::string& source) {
  KeyValues kv;
  kv.source_ = source;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (kv.values_.count(key)) {
      throw ConfigError(where + ": duplicate key '" + key + "' (first on line " +
                        std::to_string(kv.lines_[key]) + ")");
    }
    kv.values_[key] = value;
    kv.lines_[key] = line_no;
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str(), file.string());
}

std::vector<std::string> KeyValues::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

std::optional<std::string> KeyValues::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void KeyValues::bad(const std::string& key, const std::string& expected) const {
  const auto line = lines_.find(key);
  const std::string where = line == lines_.end() ? source_ : source_ + ":" + std::to_string(line->second);
  throw ConfigError(where + ": '" + key + "' must be " + expected + ", got '" + values_.at(key) + "'");
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  return raw(key).value_or(fallback);
}

int KeyValues::get_int(const std::string& key, int fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  const auto v = parse_integer<int>(*r);
  if (!v) bad(key, "an integer");
  return *v;
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  const auto v = parse_integer<std::uint64_t>(*r);
  if (!v) bad(key, "a non-negative integer");
  return *v;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  const auto v = parse_real(*r);
  if (!v) bad(key, "a finite number");
  return *v;
}

synth::Range KeyValues::get_range(const std::string& key, synth::Range fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  const auto parts = split_commas(*r);
  if (parts.size() != 2) bad(key, "'lo,hi'");
  const auto lo = parse_real(parts[0]);
  const auto hi = parse_real(parts[1]);
  if (!lo || !hi) bad(key, "'lo,hi'");
  return {*lo, *hi};
}

std::vector<int> KeyValues::get_int_list(const std::string& key, std::vector<int> fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  std::vector<int> out;
  for (const auto part : split_commas(*r)) {
    const auto v = parse_integer<int>(part);
    if (!v) bad(key, "a comma-separated list of integers");
    out.push_back(*v);
  }
  return out;
}

void KeyValues::require_known(const std::vector<std::string_view>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(source_ + ":" + std::to_string(lines_.at(key)) + ": unknown key '" + key + "'");
    }
  }
}

synth::FleetSpec fleet_spec_from(const KeyValues& kv) {
  kv.require_known({"n_cells", "seed", "eol_min", "eol_max", "id_prefix", "nominal_capacity",
                    "knee_fraction", "pre_knee_share", "post_knee_exponent", "capacity_noise_std",
                    "resistance_initial", "resistance_growth", "temp_base", "temp_spread",
                    "charge_time_base", "charge_time_drift"});
  synth::FleetSpec s;
  s.n_cells = kv.get_int("n_cells", s.n_cells);
  s.master_seed = kv.get_u64("seed", s.master_seed);
  s.eol_min = kv.get_int("eol_min", s.eol_min);
  s.eol_max = kv.get_int("eol_max", s.eol_max);
  s.id_prefix = kv.get_string("id_prefix", s.id_prefix);
  s.nominal_capacity = kv.get_range("nominal_capacity", s.nominal_capacity);
  s.knee_fraction = kv.get_range("knee_fraction", s.knee_fraction);
  s.pre_knee_share = kv.get_range("pre_knee_share", s.pre_knee_share);
  s.post_knee_exponent = kv.get_range("post_knee_exponent", s.post_knee_exponent);
  s.capacity_noise_std = kv.get_range("capacity_noise_std", s.capacity_noise_std);
  s.resistance_initial = kv.get_range("resistance_initial", s.resistance_initial);
  s.resistance_growth = kv.get_range("resistance_growth", s.resistance_growth);
  s.temp_base = kv.get_range("temp_base", s.temp_base);
  s.temp_spread = kv.get_range("temp_spread", s.temp_spread);
  s.charge_time_base = kv.get_range("charge_time_base", s.charge_time_base);
  s.charge_time_drift = kv.get_range("charge_time_drift", s.charge_time_drift);
  if (s.id_prefix.empty() || s.id_prefix.find_first_of("/\\ ,") != std::string::npos) {
    throw ConfigError("id_prefix must be non-empty and free of path separators, spaces and commas");
  }
  s.validate();
  return s;
}

}  // namespace rul2stage::config
