#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "crowdnav/env.hpp"
#include "crowdnav/value_network.hpp"

namespace crowdnav {

struct Action {
  Vec2 velocity;
  /// Index into the ActionSet; for continuous policies the nearest entry.
  int index = -1;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const World& world, const EnvConfig& config, std::mt19937_64& rng) const = 0;
  virtual std::string name() const = 0;
};

/// r(J, a) + gamma_step * V(CVM(J, a)) for every action, in ActionSet order.
/// The reward uses the configured reward mode and the goal of `world.robot`.
std::array<double, ActionSet::kSize> lookahead_values(const World& world, const ValueNetwork& net,
                                                      const ActionSet& actions, const EnvConfig& config,
                                                      double gamma_step);

/// Argmax of lookahead_values; ties go to the lowest action index.
std::size_t greedy_action(const World& world, const ValueNetwork& net, const ActionSet& actions,
                          const EnvConfig& config, double gamma_step);

/// Epsilon-greedy over the one-step lookahead.
class ValuePolicy final : public Policy {
 public:
  ValuePolicy(const ValueNetwork& net, double epsilon) : net_(net), epsilon_(epsilon) {}
  Action act(const World& world, const EnvConfig& config, std::mt19937_64& rng) const override;
  std::string name() const override { return "value"; }

 private:
  const ValueNetwork& net_;
  double epsilon_;
};

/// Uniform over the 9 discrete actions at every step.
class RandomPolicy final : public Policy {
 public:
  Action act(const World& world, const EnvConfig& config, std::mt19937_64& rng) const override;
  std::string name() const override { return "random"; }
};

/// Robot steered by ORCA. Humans never yield to the robot, so the robot
/// carries the whole avoidance manoeuvre (responsibility 1).
class OrcaPolicy final : public Policy {
 public:
  Action act(const World& world, const EnvConfig& config, std::mt19937_64& rng) const override;
  std::string name() const override { return "orca"; }
};

/// Rolls one episode from reset(config, env_seed) until termination.
EpisodeRecord run_episode(const EnvConfig& config, const Policy& policy, std::uint64_t env_seed,
                          std::mt19937_64& rng);

}  // namespace crowdnav
