#include "crowdnav/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowdnav/errors.hpp"

namespace crowdnav {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

CurveRow curve_row(int episode, CurvePhase phase, const EpisodeRecord& record, double gamma_step, double epsilon,
                   double loss) {
  return {episode, phase, record.outcome, record.nav_time, record.discounted_return(gamma_step), epsilon, loss};
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("train.buffer_capacity", "must be > 0");
}

void ReplayBuffer::push(Transition transition) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(transition));
    return;
  }
  items_[head_] = std::move(transition);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw ContractError("replay buffer index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, std::mt19937_64& rng) const {
  if (count > items_.size()) throw ContractError("cannot sample more transitions than stored");
  // Floyd's algorithm: uniform subset without replacement.
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  const std::size_t n = items_.size();
  for (std::size_t j = n - count; j < n; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) {
      chosen.push_back(t);
    } else {
      chosen.push_back(j);
    }
  }
  return chosen;
}

void ReplayBuffer::clear() {
  items_.clear();
  head_ = 0;
}

void TrainConfig::validate() const {
  if (episodes < 0) throw ConfigError("train.episodes", "must be >= 0");
  if (!(eps_start >= 0.0 && eps_start <= 1.0)) throw ConfigError("train.eps_start", "must be in [0, 1]");
  if (!(eps_end >= 0.0 && eps_end <= eps_start)) throw ConfigError("train.eps_end", "must be in [0, eps_start]");
  if (eps_decay_episodes <= 0) throw ConfigError("train.eps_decay_episodes", "must be > 0");
  if (!(lr_rl > 0.0)) throw ConfigError("train.lr_rl", "must be > 0");
  if (!(lr_il > 0.0)) throw ConfigError("train.lr_il", "must be > 0");
  if (il_epochs <= 0) throw ConfigError("train.il_epochs", "must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum", "must be in [0, 1)");
  if (batch_size <= 0) throw ConfigError("train.batch_size", "must be > 0");
  if (grad_steps_per_episode <= 0) throw ConfigError("train.grad_steps_per_episode", "must be > 0");
  if (target_update_interval <= 0) throw ConfigError("train.target_update_interval", "must be > 0");
  if (buffer_capacity <= 0) throw ConfigError("train.buffer_capacity", "must be > 0");
  if (init_episodes <= 0) throw ConfigError("train.init_episodes", "must be > 0");
  if (validation_interval <= 0) throw ConfigError("train.validation_interval", "must be > 0");
  if (validation_episodes <= 0) throw ConfigError("train.validation_episodes", "must be > 0");
  if (checkpoint_interval <= 0) throw ConfigError("train.checkpoint_interval", "must be > 0");
  if (il_pretrain && init_policy != InitPolicy::Demonstration) {
    throw ConfigError("train.il_pretrain", "requires init_policy = demonstration");
  }
  network.validate();
}

std::string_view to_string(CurvePhase phase) {
  switch (phase) {
    case CurvePhase::Init: return "init";
    case CurvePhase::Train: return "train";
    case CurvePhase::Validation: return "val";
  }
  return "train";
}

std::optional<CurvePhase> parse_curve_phase(std::string_view text) {
  for (auto p : {CurvePhase::Init, CurvePhase::Train, CurvePhase::Validation}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

bool CurveRow::operator==(const CurveRow& o) const {
  return episode == o.episode && phase == o.phase && outcome == o.outcome && same_double(nav_time, o.nav_time) &&
         same_double(discounted_reward, o.discounted_reward) && same_double(epsilon, o.epsilon) &&
         same_double(mean_loss, o.mean_loss);
}

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL)) + index);
}

double epsilon_schedule(int episode, const TrainConfig& config) {
  if (episode >= config.eps_decay_episodes) return config.eps_end;
  const double frac = static_cast<double>(std::max(episode, 0)) / config.eps_decay_episodes;
  return config.eps_start + (config.eps_end - config.eps_start) * frac;
}

std::vector<Transition> episode_transitions(const EpisodeRecord& episode) {
  std::vector<Transition> out;
  out.reserve(episode.steps.size());
  JointState joint = episode.steps.empty() ? JointState{} : episode.steps.front().world.joint();
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    const StepRecord& s = episode.steps[t];
    const bool last = t + 1 == episode.steps.size();
    JointState next = last ? episode.final_world.joint() : episode.steps[t + 1].world.joint();
    Transition tr;
    tr.joint = std::move(joint);
    tr.action_index = s.action_index;
    tr.reward = s.reward;
    tr.next_joint = next;
    tr.terminal = last && (s.info == StepInfo::Collision || s.info == StepInfo::ReachGoal);
    out.push_back(std::move(tr));
    joint = std::move(next);
  }
  return out;
}

std::vector<Transition> her_relabel(const EpisodeRecord& episode, const EnvConfig& config) {
  if (episode.outcome != Outcome::Timeout) {
    throw ContractError("hindsight relabeling applies to Timeout episodes only, got " +
                        std::string(to_string(episode.outcome)));
  }
  if (!episode.discomfort_free(config.discomfort_dist)) {
    throw ContractError("hindsight relabeling requires a discomfort-free episode");
  }
  const Vec2 goal = episode.final_world.robot.position;
  auto relabeled_joint = [&](const World& world) {
    WorldAgentState robot = world.robot;
    robot.goal = goal;
    return to_robot_centric(robot, world.humans);
  };

  std::vector<Transition> out;
  out.reserve(episode.steps.size());
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    const bool last = t + 1 == episode.steps.size();
    Transition tr;
    tr.joint = relabeled_joint(episode.steps[t].world);
    tr.next_joint = relabeled_joint(last ? episode.final_world : episode.steps[t + 1].world);
    tr.action_index = episode.steps[t].action_index;
    tr.reward = last ? 1.0 : episode.steps[t].reward;
    tr.terminal = last;
    out.push_back(std::move(tr));
  }
  return out;
}

StoreKind store_episode(ReplayBuffer& buffer, const EpisodeRecord& episode, const EnvConfig& config, bool her) {
  const bool relabel =
      her && episode.outcome == Outcome::Timeout && episode.discomfort_free(config.discomfort_dist);
  auto transitions = relabel ? her_relabel(episode, config) : episode_transitions(episode);
  for (auto& t : transitions) buffer.push(std::move(t));
  return relabel ? StoreKind::Relabeled : StoreKind::Verbatim;
}

Eigen::VectorXd td_targets(const ValueNetwork& target, std::span<const Transition* const> batch, double gamma_step) {
  std::vector<const JointState*> next;
  next.reserve(batch.size());
  for (const auto* t : batch) next.push_back(&t->next_joint);
  const Eigen::VectorXd bootstrap = target.forward(PackedBatch::pack(std::span<const JointState* const>(next)));
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    y(k) = batch[i]->terminal ? batch[i]->reward : batch[i]->reward + gamma_step * bootstrap(k);
  }
  return y;
}

double td_update(ValueNetwork& params, const ValueNetwork& target, SgdMomentum& optimizer, const ReplayBuffer& buffer,
                 const TrainConfig& config, double gamma_step, std::mt19937_64& rng, int* skipped) {
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  if (buffer.size() < batch_size) {
    if (skipped) ++*skipped;
    return std::numeric_limits<double>::quiet_NaN();
  }
  GradientBuffer grads = params.make_gradient_buffer();
  std::vector<const Transition*> batch(batch_size);
  std::vector<const JointState*> joints(batch_size);
  double total = 0.0;
  for (int step = 0; step < config.grad_steps_per_episode; ++step) {
    const auto indices = buffer.sample_indices(batch_size, rng);
    for (std::size_t i = 0; i < batch_size; ++i) {
      batch[i] = &buffer.at(indices[i]);
      joints[i] = &batch[i]->joint;
    }
    const Eigen::VectorXd y = td_targets(target, batch, gamma_step);
    total += params.backward(PackedBatch::pack(std::span<const JointState* const>(joints)), y, grads);
    optimizer.step(params, grads);
  }
  return total / config.grad_steps_per_episode;
}

std::vector<EpisodeRecord> generate_demonstrations(const EnvConfig& config, int episodes, std::uint64_t seed) {
  EnvConfig sparse = config;
  sparse.reward_mode = RewardMode::Sparse;
  const OrcaPolicy policy;
  std::mt19937_64 rng(derive_seed(seed, SeedStream::Policy));
  std::vector<EpisodeRecord> demos;
  demos.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  for (int i = 0; i < episodes; ++i) {
    demos.push_back(run_episode(sparse, policy, derive_seed(seed, SeedStream::Demonstration, static_cast<std::uint64_t>(i)), rng));
  }
  return demos;
}

std::vector<double> demonstration_returns(const EpisodeRecord& demo, double gamma_step) {
  std::vector<double> returns(demo.steps.size());
  double running = 0.0;
  for (std::size_t t = demo.steps.size(); t-- > 0;) {
    running = demo.steps[t].reward + gamma_step * running;
    returns[t] = running;
  }
  return returns;
}

std::vector<double> il_pretrain(ValueNetwork& params, const std::vector<EpisodeRecord>& demos,
                                const TrainConfig& config, const EnvConfig& env, std::uint64_t seed) {
  if (demos.empty()) throw ContractError("imitation pretraining needs at least one demonstration");
  const double gamma_step = discount_factor(env.gamma, env.dt, env.v_pref);
  std::vector<JointState> states;
  std::vector<double> targets;
  for (const auto& demo : demos) {
    const auto returns = demonstration_returns(demo, gamma_step);
    for (std::size_t t = 0; t < demo.steps.size(); ++t) {
      states.push_back(demo.steps[t].world.joint());
      targets.push_back(returns[t]);
    }
  }
  SgdMomentum optimizer(config.lr_il, config.momentum);
  GradientBuffer grads = params.make_gradient_buffer();
  std::mt19937_64 rng(derive_seed(seed, SeedStream::Replay, 1));
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  std::vector<double> epoch_losses;
  std::vector<const JointState*> joints;
  for (int epoch = 0; epoch < config.il_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      joints.clear();
      Eigen::VectorXd y(static_cast<Eigen::Index>(end - start));
      for (std::size_t i = start; i < end; ++i) {
        joints.push_back(&states[order[i]]);
        y(static_cast<Eigen::Index>(i - start)) = targets[order[i]];
      }
      total += params.backward(PackedBatch::pack(std::span<const JointState* const>(joints)), y, grads);
      optimizer.step(params, grads);
      ++batches;
    }
    epoch_losses.push_back(total / static_cast<double>(batches));
  }
  return epoch_losses;
}

ValidationSummary validate_policy(const ValueNetwork& params, const EnvConfig& env, int episodes, std::uint64_t seed,
                                  int at_episode, std::vector<CurveRow>* rows) {
  const double gamma_step = discount_factor(env.gamma, env.dt, env.v_pref);
  const ValuePolicy policy(params, 0.0);
  std::mt19937_64 rng(0);
  ValidationSummary summary;
  summary.episode = at_episode;
  int successes = 0;
  int collisions = 0;
  double nav_time = 0.0;
  double reward = 0.0;
  for (int i = 0; i < episodes; ++i) {
    const auto record = run_episode(env, policy, derive_seed(seed, SeedStream::ValidationEnv, static_cast<std::uint64_t>(i)), rng);
    if (record.outcome == Outcome::ReachGoal) {
      ++successes;
      nav_time += record.nav_time;
    }
    if (record.outcome == Outcome::Collision) ++collisions;
    reward += record.discounted_return(gamma_step);
    if (rows) rows->push_back(curve_row(at_episode, CurvePhase::Validation, record, gamma_step, 0.0,
                                        std::numeric_limits<double>::quiet_NaN()));
  }
  summary.success_rate = static_cast<double>(successes) / episodes;
  summary.collision_rate = static_cast<double>(collisions) / episodes;
  summary.mean_nav_time = successes ? nav_time / successes : std::numeric_limits<double>::quiet_NaN();
  summary.mean_discounted_reward = reward / episodes;
  return summary;
}

TrainResult train(const TrainConfig& config, const EnvConfig& env, bool her, std::uint64_t seed,
                  const std::optional<ValueNetwork>& initial, const TrainHooks& hooks) {
  config.validate();
  env.validate();
  TrainResult result;
  result.params = initial ? *initial : ValueNetwork(config.network, derive_seed(seed, SeedStream::NetworkInit));
  if (config.episodes == 0) return result;

  auto emit = [&](const CurveRow& row) {
    result.curve.push_back(row);
    if (hooks.on_curve_row) hooks.on_curve_row(row);
  };
  auto log = [&](const std::string& msg) {
    if (hooks.log) hooks.log(msg);
  };
  const double gamma_step = discount_factor(env.gamma, env.dt, env.v_pref);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ValueNetwork& net = result.params;
  ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  std::mt19937_64 policy_rng(derive_seed(seed, SeedStream::Policy));
  std::mt19937_64 replay_rng(derive_seed(seed, SeedStream::Replay));

  if (config.init_policy == InitPolicy::Demonstration) {
    const auto demos = generate_demonstrations(env, config.init_episodes, derive_seed(seed, SeedStream::Demonstration));
    int demo_index = 0;
    for (const auto& demo : demos) {
      store_episode(buffer, demo, env, her);
      emit(curve_row(++demo_index, CurvePhase::Init, demo, gamma_step, 0.0, nan));
    }
    if (config.il_pretrain) {
      const auto losses = il_pretrain(net, demos, config, env, seed);
      log("imitation pretraining done, final epoch loss " + std::to_string(losses.back()));
    }
  } else {
    const RandomPolicy random;
    for (int i = 0; i < config.init_episodes; ++i) {
      const auto record = run_episode(env, random, derive_seed(seed, SeedStream::InitEnv, static_cast<std::uint64_t>(i)), policy_rng);
      store_episode(buffer, record, env, her);
      emit(curve_row(i + 1, CurvePhase::Init, record, gamma_step, 1.0, nan));
    }
  }
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    if (buffer.at(i).reward == 1.0) ++result.buffer_successes;
  }
  log("replay buffer initialised with " + std::to_string(buffer.size()) + " transitions (" +
      std::to_string(result.buffer_successes) + " with reward 1)");

  ValueNetwork target = sync_target(net);
  SgdMomentum optimizer(config.lr_rl, config.momentum);
  for (int episode = 1; episode <= config.episodes; ++episode) {
    const double eps = epsilon_schedule(episode - 1, config);
    const ValuePolicy policy(net, eps);
    const auto record = run_episode(env, policy, derive_seed(seed, SeedStream::TrainEnv, static_cast<std::uint64_t>(episode)), policy_rng);
    store_episode(buffer, record, env, her);
    const double loss = td_update(net, target, optimizer, buffer, config, gamma_step, replay_rng, &result.skipped_updates);
    if (episode % config.target_update_interval == 0) target = sync_target(net);
    emit(curve_row(episode, CurvePhase::Train, record, gamma_step, eps, loss));
    result.episodes_run = episode;

    if (hooks.on_checkpoint && episode % config.checkpoint_interval == 0) hooks.on_checkpoint(episode, net);
    if (episode % config.validation_interval == 0 || episode == config.episodes) {
      std::vector<CurveRow> rows;
      const auto summary = validate_policy(net, env, config.validation_episodes, seed, episode, &rows);
      for (const auto& row : rows) emit(row);
      result.validations.push_back(summary);
      log("episode " + std::to_string(episode) + ": validation success " + std::to_string(summary.success_rate) +
          ", collision " + std::to_string(summary.collision_rate) + ", loss " + std::to_string(loss));
      if (hooks.stop_after_validation && hooks.stop_after_validation(summary)) break;
    }
  }
  result.buffer_size = buffer.size();
  return result;
}

CurriculumResult curriculum_train(const TrainConfig& stage1, const EnvConfig& stage1_env, const TrainConfig& stage2,
                                  const EnvConfig& stage2_env, std::uint64_t seed, const TrainHooks& stage1_hooks,
                                  const TrainHooks& stage2_hooks) {
  auto first = train(stage1, stage1_env, true, derive_seed(seed, SeedStream::Stage, 1), std::nullopt, stage1_hooks);
  auto second = train(stage2, stage2_env, true, derive_seed(seed, SeedStream::Stage, 2), first.params, stage2_hooks);
  ValueNetwork params = second.params;
  return {std::move(params), std::move(first), std::move(second)};
}

}  // namespace crowdnav
