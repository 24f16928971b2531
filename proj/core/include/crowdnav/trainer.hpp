#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crowdnav/env.hpp"
#include "crowdnav/policy.hpp"
#include "crowdnav/value_network.hpp"

namespace crowdnav {

struct Transition {
  JointState joint;
  int action_index = -1;
  double reward = 0.0;
  JointState next_joint;
  bool terminal = false;
};

/// FIFO ring of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition transition);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Oldest-first access.
  const Transition& at(std::size_t i) const;
  /// `count` distinct indices drawn uniformly; requires count <= size().
  std::vector<std::size_t> sample_indices(std::size_t count, std::mt19937_64& rng) const;
  void clear();

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> items_;
};

enum class InitPolicy { Random, Demonstration };

struct TrainConfig {
  int episodes = 10000;
  double eps_start = 0.5;
  double eps_end = 0.1;
  int eps_decay_episodes = 5000;
  double lr_rl = 0.001;
  double lr_il = 0.01;
  int il_epochs = 50;
  double momentum = 0.9;
  int batch_size = 100;
  int grad_steps_per_episode = 100;
  int target_update_interval = 50;
  int buffer_capacity = 100000;
  int init_episodes = 3000;
  InitPolicy init_policy = InitPolicy::Random;
  /// Supervised pretraining on the demonstrations before RL.
  bool il_pretrain = false;
  int validation_interval = 500;
  int validation_episodes = 100;
  int checkpoint_interval = 1000;
  NetworkShape network;

  void validate() const;
};

enum class CurvePhase { Init, Train, Validation };
std::string_view to_string(CurvePhase phase);
std::optional<CurvePhase> parse_curve_phase(std::string_view text);

struct CurveRow {
  int episode = 0;
  CurvePhase phase = CurvePhase::Train;
  Outcome outcome = Outcome::Timeout;
  double nav_time = 0.0;
  double discounted_reward = 0.0;
  double epsilon = 0.0;
  double mean_loss = 0.0;  // NaN when no update ran

  bool operator==(const CurveRow& other) const;
};

struct ValidationSummary {
  int episode = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double mean_nav_time = 0.0;
  double mean_discounted_reward = 0.0;
};

struct TrainHooks {
  std::function<void(const CurveRow&)> on_curve_row;
  std::function<void(int episode, const ValueNetwork&)> on_checkpoint;
  /// Return true to stop training after this validation sweep.
  std::function<bool(const ValidationSummary&)> stop_after_validation;
  std::function<void(const std::string&)> log;
};

struct TrainResult {
  ValueNetwork params;
  std::vector<CurveRow> curve;
  std::vector<ValidationSummary> validations;
  int episodes_run = 0;
  int skipped_updates = 0;
  std::size_t buffer_size = 0;
  std::size_t buffer_successes = 0;  // reward-1 transitions in the buffer after initialisation
};

/// Stream identifiers for derive_seed.
enum class SeedStream : std::uint64_t {
  TrainEnv = 1,
  ValidationEnv = 2,
  Policy = 3,
  NetworkInit = 4,
  Replay = 5,
  Demonstration = 6,
  InitEnv = 7,
  Stage = 8,
};

/// Deterministic per-stream seed from one global seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index = 0);

double epsilon_schedule(int episode, const TrainConfig& config);

/// Transitions of an episode as recorded. Only ReachGoal and Collision end in
/// a terminal transition; a timeout's last transition still bootstraps.
std::vector<Transition> episode_transitions(const EpisodeRecord& episode);

/// Relabels a discomfort-free Timeout episode with its final robot position as
/// the goal. Throws ContractError for any other episode.
std::vector<Transition> her_relabel(const EpisodeRecord& episode, const EnvConfig& config);

/// Outcome of storing an episode, for bookkeeping and tests.
enum class StoreKind { Verbatim, Relabeled };
StoreKind store_episode(ReplayBuffer& buffer, const EpisodeRecord& episode, const EnvConfig& config, bool her);

/// Minibatch TD regression toward r + gamma_step * V_target(J'), with the
/// bootstrap dropped on terminal transitions. Returns the mean loss, or NaN
/// (and counts a skip) when the buffer holds fewer than batch_size items.
double td_update(ValueNetwork& params, const ValueNetwork& target, SgdMomentum& optimizer, const ReplayBuffer& buffer,
                 const TrainConfig& config, double gamma_step, std::mt19937_64& rng, int* skipped = nullptr);

/// TD targets for the given transitions (exposed for tests).
Eigen::VectorXd td_targets(const ValueNetwork& target, std::span<const Transition* const> batch, double gamma_step);

std::vector<EpisodeRecord> generate_demonstrations(const EnvConfig& config, int episodes, std::uint64_t seed);

/// Discounted return from every step of a demonstration: sum_i gamma_step^i r_{t+i}.
std::vector<double> demonstration_returns(const EpisodeRecord& demo, double gamma_step);

/// Supervised regression of V onto demonstration returns. Returns per-epoch mean loss.
std::vector<double> il_pretrain(ValueNetwork& params, const std::vector<EpisodeRecord>& demos,
                                const TrainConfig& config, const EnvConfig& env, std::uint64_t seed);

ValidationSummary validate_policy(const ValueNetwork& params, const EnvConfig& env, int episodes, std::uint64_t seed,
                                  int at_episode, std::vector<CurveRow>* rows = nullptr);

TrainResult train(const TrainConfig& config, const EnvConfig& env, bool her, std::uint64_t seed,
                  const std::optional<ValueNetwork>& initial = std::nullopt, const TrainHooks& hooks = {});

struct CurriculumResult {
  ValueNetwork params;
  TrainResult stage1;
  TrainResult stage2;
};

/// Trains in `stage1_env` (typically one human), then continues from those
/// weights in `stage2_env`. With stage2 episodes == 0 the stage-1 weights are returned.
CurriculumResult curriculum_train(const TrainConfig& stage1, const EnvConfig& stage1_env, const TrainConfig& stage2,
                                  const EnvConfig& stage2_env, std::uint64_t seed, const TrainHooks& stage1_hooks = {},
                                  const TrainHooks& stage2_hooks = {});

}  // namespace crowdnav
