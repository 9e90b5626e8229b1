#ifndef RUL2STAGE_COMMANDS_HPP
#define RUL2STAGE_COMMANDS_HPP

#include "rul2stage/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace rul2stage::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> features;
  bool quiet = false;
};

/// Config file (if any) plus command-line overrides, validated.
pipeline::RunConfig resolve_run_config(const CommonOptions& options);

/// Exclusive marker file in an output directory, removed on destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path file_;
};

/// `--config` names a fleet spec; writes CSVs and manifest.txt to `--out`.
void cmd_generate(const CommonOptions& options, std::ostream& log);

/// Both stages; writes hs.ckpt, rul.ckpt, histories, FPC decisions, split.
void cmd_train(const CommonOptions& options, std::ostream& log);

/// Loads hs.ckpt and rul.ckpt from `checkpoints` (default: the output
/// directory) and evaluates the configured test set.
void cmd_evaluate(const CommonOptions& options, const std::optional<std::filesystem::path>& checkpoints,
                  std::ostream& log);

/// Trains and evaluates once per feature count with a shared seed.
void cmd_ablate(const CommonOptions& options, const std::optional<std::vector<int>>& counts, std::ostream& log);

void cmd_inspect(const std::filesystem::path& checkpoint, std::ostream& out);

int exit_code_for(const std::exception& e);

/// Runs `command`, reporting any exception on `err` and mapping it to an exit code.
int run_guarded(const std::function<void()>& command, std::ostream& err);

}  // namespace rul2stage::cli

#endif  // RUL2STAGE_COMMANDS_HPP
