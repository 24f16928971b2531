#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crowdnav/env.hpp"
#include "crowdnav/trainer.hpp"

namespace crowdnav {

enum class Method { RL, RL_IL, RL_HER, RL_RS, RL_HER_CL };

/// Identifier used in config files ("RL_HER_CL").
std::string_view to_string(Method method);
/// Table label ("RL+HER+CL").
std::string_view method_label(Method method);
std::optional<Method> parse_method(std::string_view text);

struct CurriculumConfig {
  /// Stage 1 runs in this smaller crowd; stage 2 uses env.n_humans and train.episodes.
  int stage1_humans = 1;
  int stage1_episodes = 10000;
};

struct EvalConfig {
  int episodes = 500;
  /// Evaluation seeds are seed_base + i, disjoint from the training and validation streams.
  std::uint64_t seed_base = 1000000;
};

struct RunConfig {
  Method method = Method::RL_HER_CL;
  std::uint64_t seed = 0;
  std::string output_dir;
  EnvConfig env;
  TrainConfig train;
  bool her = true;
  CurriculumConfig curriculum;
  EvalConfig eval;

  /// Field ranges plus method consistency: the method fixes the reward mode,
  /// HER, imitation pretraining and (for RL_IL, RL_RS, RL_HER_CL) the replay initialisation.
  void validate() const;
  bool curriculum_enabled() const { return method == Method::RL_HER_CL; }
};

/// Defaults for `method` with every method-derived field set consistently.
RunConfig default_run_config(Method method);

using Override = std::pair<std::string, std::string>;

/// Parses a JSON config. Missing keys take defaults (method-derived ones from
/// the chosen method); unknown keys are errors. Overrides use dotted keys with
/// dashes or underscores ("env.n-humans", "1") and are applied before parsing.
RunConfig parse_run_config(std::string_view text, const std::string& source, const std::vector<Override>& overrides = {});
RunConfig load_run_config(const std::string& path, const std::vector<Override>& overrides = {});
/// Config built from defaults plus overrides, no file.
RunConfig run_config_from_overrides(const std::vector<Override>& overrides);

/// Every field written out explicitly; parsing the result gives back the same config.
std::string dump_run_config(const RunConfig& config);

struct RunResult {
  ValueNetwork params;
  /// One entry per training stage (two for the curriculum method).
  std::vector<TrainResult> stages;
};

/// Dispatches to train or curriculum_train. `hooks(stage)` supplies hooks for stage 1, 2.
RunResult run_training(const RunConfig& config, const std::function<TrainHooks(int stage)>& hooks = {});

/// Environment and training config of one stage (stage 1 of a curriculum is the small crowd).
EnvConfig stage_env(const RunConfig& config, int stage);
TrainConfig stage_train(const RunConfig& config, int stage);
int stage_count(const RunConfig& config);

}  // namespace crowdnav
