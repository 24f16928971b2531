#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "crowdnav/geometry.hpp"
#include "crowdnav/orca.hpp"

namespace crowdnav {

enum class RewardMode { Sparse, Shaped };

struct EnvConfig {
  int n_humans = 5;
  double circle_radius = 4.0;
  double dt = 0.25;
  double time_limit = 25.0;
  double discomfort_dist = 0.2;
  double agent_radius = 0.3;
  double v_pref = 1.0;
  RewardMode reward_mode = RewardMode::Sparse;
  double alpha = 0.002;
  /// Half-width of the uniform noise added to each on-circle start coordinate.
  double position_noise = 0.5;
  /// Discount base; the per-step discount is gamma^(dt * v_pref).
  double gamma = 0.9;
  OrcaParams orca;

  void validate() const;
  /// Upper bound on decision steps in one episode.
  int max_steps() const;
};

/// Stop action followed by 8 headings 2*pi*k/8 at speed v_pref.
class ActionSet {
 public:
  static constexpr std::size_t kSize = 9;

  explicit ActionSet(double speed = 1.0);
  const Vec2& operator[](std::size_t i) const { return actions_[i]; }
  std::size_t size() const { return kSize; }
  const std::array<Vec2, kSize>& actions() const { return actions_; }
  /// Index of the action closest to `velocity`.
  std::size_t nearest(const Vec2& velocity) const;

 private:
  std::array<Vec2, kSize> actions_;
};

struct World {
  WorldAgentState robot;
  std::vector<WorldAgentState> humans;
  double time = 0.0;
  int step_count = 0;

  JointState joint() const { return to_robot_centric(robot, humans); }
  bool operator==(const World&) const = default;
};

enum class StepInfo { Nothing, Discomfort, Collision, ReachGoal, Timeout };
enum class Outcome { ReachGoal, Collision, Timeout };

std::string_view to_string(StepInfo info);
std::string_view to_string(Outcome outcome);
std::optional<StepInfo> parse_step_info(std::string_view text);
std::optional<Outcome> parse_outcome(std::string_view text);
bool is_terminal(StepInfo info);

struct StepOutcome {
  double reward = 0.0;
  StepInfo info = StepInfo::Nothing;
  /// Closest surface separation to any human during the step (+inf with no humans).
  double d_min = 0.0;
  bool reached = false;
  World next_world;
  JointState next_joint;
};

struct StepRecord {
  World world;  // state before the action
  Vec2 action;
  int action_index = -1;
  double reward = 0.0;
  double d_min = 0.0;
  StepInfo info = StepInfo::Nothing;

  bool operator==(const StepRecord&) const = default;
};

struct EpisodeRecord {
  std::vector<StepRecord> steps;
  World final_world;
  Outcome outcome = Outcome::Timeout;
  double nav_time = 0.0;
  int discomfort_count = 0;

  std::size_t decision_steps() const { return steps.size(); }
  /// True when no step came closer than the comfort distance or collided.
  bool discomfort_free(double discomfort_dist) const;
  /// Sum_k gamma_step^k * r_k over the recorded rewards.
  double discounted_return(double gamma_step) const;
  bool operator==(const EpisodeRecord&) const = default;
};

double sparse_reward(double d_min, double d_g_next, double discomfort_dist, bool reached);
double shaped_reward(double d_min, double dist, double discomfort_dist, double alpha, bool reached);
double step_reward(const EnvConfig& config, double d_min, double d_g_next, bool reached);
double discount_factor(double gamma, double dt, double v_pref);

/// Circle-crossing layout: robot at angle -pi/2 heading to +pi/2, humans at
/// random angles heading to the antipode. Throws ScenarioError if a human
/// cannot be placed within 1000 draws.
World reset(const EnvConfig& config, std::uint64_t seed);

/// Smallest closest approach between the robot moving with `action` and each
/// human moving with its current velocity over one interval.
double robot_clearance(const World& world, const Vec2& action, double dt);

/// Advances the world by one decision interval with the robot commanding `action`.
StepOutcome step(const World& world, const Vec2& action, const EnvConfig& config);

/// Fills outcome, nav_time and discomfort_count from the step list.
void finalize_record(EpisodeRecord& record, const EnvConfig& config);

/// Thin stateful wrapper for rollouts.
class CrowdEnv {
 public:
  explicit CrowdEnv(EnvConfig config);

  const World& reset(std::uint64_t seed);
  StepOutcome step(std::size_t action_index);
  StepOutcome step_velocity(const Vec2& velocity);
  const World& world() const { return world_; }
  const EnvConfig& config() const { return config_; }
  const ActionSet& actions() const { return actions_; }
  bool done() const { return done_; }

 private:
  EnvConfig config_;
  ActionSet actions_;
  World world_;
  bool done_ = true;
};

}  // namespace crowdnav
