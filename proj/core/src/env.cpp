#include "crowdnav/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "crowdnav/errors.hpp"

namespace crowdnav {

void EnvConfig::validate() const {
  if (n_humans < 0) throw ConfigError("env.n_humans", "must be >= 0");
  if (!(circle_radius > 0.0)) throw ConfigError("env.circle_radius", "must be > 0");
  if (!(dt > 0.0)) throw ConfigError("env.dt", "must be > 0");
  if (!(time_limit > dt)) throw ConfigError("env.time_limit", "must exceed dt");
  if (!(discomfort_dist > 0.0)) throw ConfigError("env.discomfort_dist", "must be > 0");
  if (!(agent_radius > 0.0)) throw ConfigError("env.agent_radius", "must be > 0");
  if (!(v_pref > 0.0)) throw ConfigError("env.v_pref", "must be > 0");
  if (!(alpha >= 0.0)) throw ConfigError("env.alpha", "must be >= 0");
  if (!(position_noise >= 0.0)) throw ConfigError("env.position_noise", "must be >= 0");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("env.gamma", "must be in (0, 1)");
  orca.validate();
}

int EnvConfig::max_steps() const { return static_cast<int>(std::ceil(time_limit / dt - 1e-9)); }

ActionSet::ActionSet(double speed) {
  actions_[0] = {0.0, 0.0};
  for (std::size_t k = 0; k < 8; ++k) {
    const double heading = 2.0 * std::numbers::pi * static_cast<double>(k) / 8.0;
    actions_[k + 1] = {speed * std::cos(heading), speed * std::sin(heading)};
  }
}

std::size_t ActionSet::nearest(const Vec2& velocity) const {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kSize; ++i) {
    const double d = (actions_[i] - velocity).squared_norm();
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

std::string_view to_string(StepInfo info) {
  switch (info) {
    case StepInfo::Nothing: return "Nothing";
    case StepInfo::Discomfort: return "Discomfort";
    case StepInfo::Collision: return "Collision";
    case StepInfo::ReachGoal: return "ReachGoal";
    case StepInfo::Timeout: return "Timeout";
  }
  return "Nothing";
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::ReachGoal: return "ReachGoal";
    case Outcome::Collision: return "Collision";
    case Outcome::Timeout: return "Timeout";
  }
  return "Timeout";
}

std::optional<StepInfo> parse_step_info(std::string_view text) {
  for (auto info : {StepInfo::Nothing, StepInfo::Discomfort, StepInfo::Collision, StepInfo::ReachGoal,
                    StepInfo::Timeout}) {
    if (to_string(info) == text) return info;
  }
  return std::nullopt;
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (auto outcome : {Outcome::ReachGoal, Outcome::Collision, Outcome::Timeout}) {
    if (to_string(outcome) == text) return outcome;
  }
  return std::nullopt;
}

bool is_terminal(StepInfo info) {
  return info == StepInfo::Collision || info == StepInfo::ReachGoal || info == StepInfo::Timeout;
}

bool EpisodeRecord::discomfort_free(double discomfort_dist) const {
  return std::none_of(steps.begin(), steps.end(), [&](const StepRecord& s) { return s.d_min < discomfort_dist; });
}

double EpisodeRecord::discounted_return(double gamma_step) const {
  double total = 0.0;
  double discount = 1.0;
  for (const auto& s : steps) {
    total += discount * s.reward;
    discount *= gamma_step;
  }
  return total;
}

double sparse_reward(double d_min, double /*d_g_next*/, double discomfort_dist, bool reached) {
  if (d_min < 0.0) return -0.25;
  if (d_min > 0.0 && d_min < discomfort_dist) return 0.5 * (d_min - discomfort_dist);
  if (reached) return 1.0;
  return 0.0;
}

double shaped_reward(double d_min, double dist, double discomfort_dist, double alpha, bool reached) {
  if (d_min < 0.0) return -1.0;
  if (d_min > 0.0 && d_min < discomfort_dist) return 0.5 * (d_min - discomfort_dist);
  if (reached) return 2.0;
  return -alpha * dist;
}

double step_reward(const EnvConfig& config, double d_min, double d_g_next, bool reached) {
  if (config.reward_mode == RewardMode::Shaped) {
    return shaped_reward(d_min, d_g_next, config.discomfort_dist, config.alpha, reached);
  }
  return sparse_reward(d_min, d_g_next, config.discomfort_dist, reached);
}

double discount_factor(double gamma, double dt, double v_pref) { return std::pow(gamma, dt * v_pref); }

World reset(const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> noise_dist(-config.position_noise, config.position_noise);

  World world;
  world.robot.position = {0.0, -config.circle_radius};
  world.robot.goal = {0.0, config.circle_radius};
  world.robot.radius = config.agent_radius;
  world.robot.v_pref = config.v_pref;

  std::vector<WorldAgentState> placed{world.robot};
  for (int i = 0; i < config.n_humans; ++i) {
    bool accepted = false;
    for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
      const double angle = angle_dist(rng);
      const double nx = noise_dist(rng);
      const double ny = noise_dist(rng);
      WorldAgentState human;
      human.position = {config.circle_radius * std::cos(angle) + nx, config.circle_radius * std::sin(angle) + ny};
      human.goal = -human.position;
      human.radius = config.agent_radius;
      human.v_pref = config.v_pref;
      accepted = std::none_of(placed.begin(), placed.end(), [&](const WorldAgentState& other) {
        const double min_dist = human.radius + other.radius + config.discomfort_dist;
        return distance(human.position, other.position) < min_dist || distance(human.position, other.goal) < min_dist;
      });
      if (accepted) {
        placed.push_back(human);
        world.humans.push_back(human);
      }
    }
    if (!accepted) {
      throw ScenarioError("could not place human " + std::to_string(i) + " after 1000 attempts");
    }
  }
  return world;
}

double robot_clearance(const World& world, const Vec2& action, double dt) {
  double d_min = std::numeric_limits<double>::infinity();
  for (const auto& human : world.humans) {
    d_min = std::min(d_min, closest_approach(world.robot.position, action, world.robot.radius, human.position,
                                             human.velocity, human.radius, dt));
  }
  return d_min;
}

StepOutcome step(const World& world, const Vec2& action, const EnvConfig& config) {
  StepOutcome out;
  out.d_min = robot_clearance(world, action, config.dt);

  World next;
  next.humans = step_humans(world.humans, config.orca, config.dt);
  next.robot = world.robot;
  next.robot.position += action * config.dt;
  next.robot.velocity = action;
  next.step_count = world.step_count + 1;
  next.time = next.step_count * config.dt;

  const double d_g = distance(next.robot.position, next.robot.goal);
  out.reached = d_g < next.robot.radius;
  out.reward = step_reward(config, out.d_min, d_g, out.reached);

  if (out.d_min < 0.0) {
    out.info = StepInfo::Collision;
  } else if (out.reached) {
    out.info = StepInfo::ReachGoal;
  } else if (next.step_count >= config.max_steps()) {
    out.info = StepInfo::Timeout;
  } else if (out.d_min > 0.0 && out.d_min < config.discomfort_dist) {
    out.info = StepInfo::Discomfort;
  }
  out.next_joint = next.joint();
  out.next_world = std::move(next);
  return out;
}

void finalize_record(EpisodeRecord& record, const EnvConfig& config) {
  record.nav_time = static_cast<double>(record.steps.size()) * config.dt;
  record.discomfort_count = static_cast<int>(std::count_if(record.steps.begin(), record.steps.end(), [&](const StepRecord& s) {
    return s.d_min > 0.0 && s.d_min < config.discomfort_dist;
  }));
  record.outcome = Outcome::Timeout;
  if (!record.steps.empty()) {
    switch (record.steps.back().info) {
      case StepInfo::Collision: record.outcome = Outcome::Collision; break;
      case StepInfo::ReachGoal: record.outcome = Outcome::ReachGoal; break;
      default: record.outcome = Outcome::Timeout; break;
    }
  }
}

CrowdEnv::CrowdEnv(EnvConfig config) : config_(std::move(config)), actions_(config_.v_pref) { config_.validate(); }

const World& CrowdEnv::reset(std::uint64_t seed) {
  world_ = crowdnav::reset(config_, seed);
  done_ = false;
  return world_;
}

StepOutcome CrowdEnv::step(std::size_t action_index) { return step_velocity(actions_[action_index]); }

StepOutcome CrowdEnv::step_velocity(const Vec2& velocity) {
  StepOutcome out = crowdnav::step(world_, velocity, config_);
  world_ = out.next_world;
  done_ = is_terminal(out.info);
  return out;
}

}  // namespace crowdnav
