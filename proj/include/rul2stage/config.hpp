#ifndef RUL2STAGE_CONFIG_HPP
#define RUL2STAGE_CONFIG_HPP

#include "rul2stage/synthgen.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rul2stage::config {

/// Flat `key = value` document. `#` starts a comment; blank lines are
/// ignored; a key may appear once.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string& source = "<config>");
  static KeyValues load(const std::filesystem::path& file);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::string& source() const { return source_; }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  synth::Range get_range(const std::string& key, synth::Range fallback) const;
  /// Comma-separated integers.
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;

  /// Throws ConfigError naming the first key not in `known`.
  void require_known(const std::vector<std::string_view>& known) const;

 private:
  std::optional<std::string> raw(const std::string& key) const;
  [[noreturn]] void bad(const std::string& key, const std::string& expected) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::string source_;
};

/// Fleet spec keys: n_cells, seed, eol_min, eol_max, id_prefix and one
/// `lo,hi` pair per parameter range (e.g. `knee_fraction = 0.55,0.75`).
synth::FleetSpec fleet_spec_from(const KeyValues& kv);

}  // namespace rul2stage::config

#endif  // RUL2STAGE_CONFIG_HPP
