#include "rul2stage/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace cli = rul2stage::cli;

int main(int argc, char** argv) {
  CLI::App app{"Two-stage battery RUL prediction: health-state classifier, FPC trigger, RUL-fraction regressor"};
  app.require_subcommand(1);

  cli::CommonOptions common;
  std::string config, out;
  std::uint64_t seed = 0;
  int features = 0;
  const auto add_common = [&](CLI::App* sub, bool with_features) {
    sub->add_option("--config", config, "Key-value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the run seed");
    sub->add_option("--out", out, "Output directory");
    if (with_features) sub->add_option("--features", features, "Number of input features (1..7)");
    sub->add_flag("--quiet", common.quiet, "Suppress progress output");
  };

  auto* generate = app.add_subcommand("generate", "Write a synthetic fleet (config is a fleet spec)");
  add_common(generate, false);
  auto* train = app.add_subcommand("train", "Train both stages");
  add_common(train, true);
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate trained checkpoints on the test set");
  add_common(evaluate, true);
  std::string checkpoints;
  evaluate->add_option("--checkpoints", checkpoints, "Directory holding hs.ckpt and rul.ckpt (default: --out)");
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate once per feature count");
  add_common(ablate, false);
  std::vector<int> counts;
  ablate->add_option("--counts", counts, "Feature counts, e.g. 1,2,3,4,7")->delimiter(',');
  auto* inspect = app.add_subcommand("inspect", "Describe a checkpoint file");
  std::string checkpoint;
  inspect->add_option("checkpoint", checkpoint, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  for (auto* sub : {generate, train, evaluate, ablate}) {
    if (!sub->parsed()) continue;
    if (sub->count("--config")) common.config = config;
    if (sub->count("--seed")) common.seed = seed;
    if (sub->count("--out")) common.out = out;
    if (sub->get_option_no_throw("--features") && sub->count("--features")) common.features = features;
  }

  return cli::run_guarded(
      [&] {
        if (generate->parsed()) cli::cmd_generate(common, std::cout);
        if (train->parsed()) cli::cmd_train(common, std::cout);
        if (evaluate->parsed()) {
          cli::cmd_evaluate(common, checkpoints.empty() ? std::nullopt : std::optional<std::filesystem::path>(checkpoints),
                            std::cout);
        }
        if (ablate->parsed()) {
          cli::cmd_ablate(common, counts.empty() ? std::nullopt : std::optional<std::vector<int>>(counts), std::cout);
        }
        if (inspect->parsed()) cli::cmd_inspect(checkpoint, std::cout);
      },
      std::cerr);
}
