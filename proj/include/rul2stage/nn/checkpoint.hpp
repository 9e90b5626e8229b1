#ifndef RUL2STAGE_NN_CHECKPOINT_HPP
#define RUL2STAGE_NN_CHECKPOINT_HPP

#include "rul2stage/dataio.hpp"
#include "rul2stage/nn/model_spec.hpp"
#include "rul2stage/nn/network.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rul2stage::nn {

inline constexpr char kCheckpointMagic[] = "RUL2STAGE-CKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to rebuild a trained model and feed it correctly.
///
/// On-disk layout, all integers and reals little-endian:
///   magic "RUL2STAGE-CKPT" (14 bytes), u32 version
///   u32 head, n_steps, step_dim, hidden_size, layers_per_stack, n_stacks,
///       dense_width, window_step
///   u32 selected channel count, then per channel: u32 length + name bytes
///   per selected channel: f64 mean, f64 std
///   u32 metadata count, then per entry: key string, value string
///   u64 parameter count, then f64 parameters in ParamLayout order
///   u64 FNV-1a hash of every preceding byte
struct Checkpoint {
  ModelSpec spec;
  dataio::FeatureSelection selection;
  dataio::NormalizationStats stats;
  int window_step = 1;
  std::vector<std::pair<std::string, std::string>> metadata;
  Eigen::VectorXd parameters;

  int window_length() const { return spec.step_dim; }

  /// Spec, selection, stats, and parameter count agree with each other.
  void validate() const;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

/// Rebuilds the network stored in a checkpoint.
Network<double> network_from(const Checkpoint& checkpoint);

}  // namespace rul2stage::nn

#endif  // RUL2STAGE_NN_CHECKPOINT_HPP
