#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace crowdnav {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
/// 2D cross product (z component of a x b).
constexpr double det(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Position, velocity and radius of one agent in the world frame. `goal` and
/// `v_pref` are private to the agent; other agents only observe the rest.
struct WorldAgentState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;
  Vec2 goal;
  double v_pref = 1.0;

  bool operator==(const WorldAgentState&) const = default;
};

/// Robot self-state in the goal-aligned frame: [d_g, v_pref, v_x, v_y, r].
struct RobotSelfState {
  static constexpr std::size_t kWidth = 5;

  double d_g = 0.0;
  double v_pref = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double radius = 0.0;

  bool operator==(const RobotSelfState&) const = default;
};

/// Observable human state relative to the robot: [d, p_x, p_y, v_x, v_y, r, r + r_robot].
struct HumanObservedState {
  static constexpr std::size_t kWidth = 7;

  double dist = 0.0;
  double px = 0.0;
  double py = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double radius = 0.0;
  double radius_sum = 0.0;

  bool operator==(const HumanObservedState&) const = default;
};

struct JointState {
  RobotSelfState robot;
  std::vector<HumanObservedState> humans;

  std::size_t width() const { return RobotSelfState::kWidth + HumanObservedState::kWidth * humans.size(); }
  /// Row-major [robot(5), human_0(7), ..., human_{n-1}(7)].
  std::vector<double> flatten() const;
  bool operator==(const JointState&) const = default;
};

/// Frame centred on the robot with the x-axis aimed at its goal. When the
/// robot sits exactly on its goal the x-axis falls back to world +x.
struct RobotFrame {
  Vec2 origin;
  Vec2 x_axis{1.0, 0.0};

  static RobotFrame from(const Vec2& position, const Vec2& goal);
  Vec2 rotate(const Vec2& world_vector) const {
    return {dot(world_vector, x_axis), det(x_axis, world_vector)};
  }
  Vec2 to_local(const Vec2& world_point) const { return rotate(world_point - origin); }
};

JointState to_robot_centric(const WorldAgentState& robot, std::span<const WorldAgentState> humans);

/// Robot adopts `action` as its velocity; humans keep their velocities.
std::pair<WorldAgentState, std::vector<WorldAgentState>> propagate_cvm(const WorldAgentState& robot,
                                                                       std::span<const WorldAgentState> humans,
                                                                       const Vec2& action, double dt);

/// Minimum surface separation of two discs moving linearly over [0, dt].
/// Negative when the discs interpenetrate at some instant.
double closest_approach(const Vec2& p_a, const Vec2& v_a, double r_a, const Vec2& p_b, const Vec2& v_b, double r_b,
                        double dt);

}  // namespace crowdnav
