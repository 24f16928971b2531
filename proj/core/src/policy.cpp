#include "crowdnav/policy.hpp"

namespace crowdnav {

std::array<double, ActionSet::kSize> lookahead_values(const World& world, const ValueNetwork& net,
                                                      const ActionSet& actions, const EnvConfig& config,
                                                      double gamma_step) {
  std::array<double, ActionSet::kSize> values{};
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Vec2& action = actions[i];
    const auto [robot, humans] = propagate_cvm(world.robot, world.humans, action, config.dt);
    const double d_min = robot_clearance(world, action, config.dt);
    const double d_g = distance(robot.position, robot.goal);
    const double reward = step_reward(config, d_min, d_g, d_g < robot.radius);
    values[i] = reward + gamma_step * net.forward(to_robot_centric(robot, humans));
  }
  return values;
}

std::size_t greedy_action(const World& world, const ValueNetwork& net, const ActionSet& actions,
                          const EnvConfig& config, double gamma_step) {
  const auto values = lookahead_values(world, net, actions, config, gamma_step);
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Action ValuePolicy::act(const World& world, const EnvConfig& config, std::mt19937_64& rng) const {
  const ActionSet actions(config.v_pref);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::size_t index = 0;
  if (epsilon_ > 0.0 && coin(rng) < epsilon_) {
    index = std::uniform_int_distribution<std::size_t>(0, actions.size() - 1)(rng);
  } else {
    index = greedy_action(world, net_, actions, config, discount_factor(config.gamma, config.dt, config.v_pref));
  }
  return {actions[index], static_cast<int>(index)};
}

Action RandomPolicy::act(const World&, const EnvConfig& config, std::mt19937_64& rng) const {
  const ActionSet actions(config.v_pref);
  const auto index = std::uniform_int_distribution<std::size_t>(0, actions.size() - 1)(rng);
  return {actions[index], static_cast<int>(index)};
}

Action OrcaPolicy::act(const World& world, const EnvConfig& config, std::mt19937_64&) const {
  OrcaParams params = config.orca;
  params.max_speed = world.robot.v_pref;
  params.responsibility = 1.0;
  const Vec2 velocity = orca_velocity(world.robot, world.humans, params, config.dt);
  return {velocity, static_cast<int>(ActionSet(config.v_pref).nearest(velocity))};
}

EpisodeRecord run_episode(const EnvConfig& config, const Policy& policy, std::uint64_t env_seed,
                          std::mt19937_64& rng) {
  EpisodeRecord record;
  World world = reset(config, env_seed);
  record.steps.reserve(static_cast<std::size_t>(config.max_steps()));
  while (true) {
    const Action action = policy.act(world, config, rng);
    StepOutcome out = step(world, action.velocity, config);
    record.steps.push_back({std::move(world), action.velocity, action.index, out.reward, out.d_min, out.info});
    world = std::move(out.next_world);
    if (is_terminal(out.info)) break;
  }
  record.final_world = std::move(world);
  finalize_record(record, config);
  return record;
}

}  // namespace crowdnav
