#ifndef RUL2STAGE_TEST_SUPPORT_HPP
#define RUL2STAGE_TEST_SUPPORT_HPP

#include "rul2stage/dataio.hpp"
#include "rul2stage/nn/model_spec.hpp"
#include "rul2stage/synthgen.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

namespace testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rul2stage-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text;
}

/// A valid cell whose discharge capacity follows `capacity(cycle)`.
inline rul2stage::dataio::CellHistory make_cell(const std::string& id, int eol,
                                                const std::function<double(int)>& capacity) {
  rul2stage::dataio::CellHistory cell;
  cell.cell_id = id;
  for (int c = 1; c <= eol; ++c) {
    rul2stage::dataio::CycleRecord r;
    r.cycle_index = c;
    r.discharge_capacity = capacity(c);
    r.charge_capacity = r.discharge_capacity * 1.004;
    r.internal_resistance = 0.016 + 1e-6 * c;
    r.charge_time = 10.0 + 1e-3 * c;
    r.temp_avg = 30.0 + 0.01 * (c % 7);
    r.temp_min = r.temp_avg - 2.0;
    r.temp_max = r.temp_avg + 2.0;
    cell.records.push_back(r);
  }
  return cell;
}

inline rul2stage::dataio::CellHistory synthetic_cell(const std::string& id, int eol, double noise = 0.0,
                                                     std::uint64_t seed = 1) {
  rul2stage::synth::DegradationParams p;
  p.cell_id = id;
  p.eol = eol;
  p.capacity_noise_std = noise;
  p.rng_seed = seed;
  return rul2stage::synth::generate_cell(p);
}

inline rul2stage::nn::ModelSpec tiny_spec(rul2stage::nn::Head head, int n_steps = 2, int step_dim = 6) {
  rul2stage::nn::ModelSpec s;
  s.head = head;
  s.n_steps = n_steps;
  s.step_dim = step_dim;
  s.hidden_size = 4;
  s.layers_per_stack = 1;
  s.n_stacks = 2;
  s.dense_width = 8;
  return s;
}

}  // namespace testing

#endif  // RUL2STAGE_TEST_SUPPORT_HPP
