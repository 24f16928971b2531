#include "crowdnav/geometry.hpp"

#include <algorithm>

namespace crowdnav {

std::vector<double> JointState::flatten() const {
  std::vector<double> out;
  out.reserve(width());
  out.insert(out.end(), {robot.d_g, robot.v_pref, robot.vx, robot.vy, robot.radius});
  for (const auto& h : humans) {
    out.insert(out.end(), {h.dist, h.px, h.py, h.vx, h.vy, h.radius, h.radius_sum});
  }
  return out;
}

RobotFrame RobotFrame::from(const Vec2& position, const Vec2& goal) {
  RobotFrame frame;
  frame.origin = position;
  const Vec2 to_goal = goal - position;
  const double len = to_goal.norm();
  if (len > 0.0) {
    frame.x_axis = to_goal / len;
  }
  return frame;
}

JointState to_robot_centric(const WorldAgentState& robot, std::span<const WorldAgentState> humans) {
  const RobotFrame frame = RobotFrame::from(robot.position, robot.goal);
  JointState joint;
  const Vec2 v = frame.rotate(robot.velocity);
  joint.robot = {distance(robot.position, robot.goal), robot.v_pref, v.x, v.y, robot.radius};
  joint.humans.reserve(humans.size());
  for (const auto& human : humans) {
    const Vec2 p = frame.to_local(human.position);
    const Vec2 hv = frame.rotate(human.velocity);
    joint.humans.push_back({p.norm(), p.x, p.y, hv.x, hv.y, human.radius, human.radius + robot.radius});
  }
  return joint;
}

std::pair<WorldAgentState, std::vector<WorldAgentState>> propagate_cvm(const WorldAgentState& robot,
                                                                       std::span<const WorldAgentState> humans,
                                                                       const Vec2& action, double dt) {
  WorldAgentState next_robot = robot;
  next_robot.position += action * dt;
  next_robot.velocity = action;
  std::vector<WorldAgentState> next_humans(humans.begin(), humans.end());
  for (auto& human : next_humans) {
    human.position += human.velocity * dt;
  }
  return {next_robot, std::move(next_humans)};
}

double closest_approach(const Vec2& p_a, const Vec2& v_a, double r_a, const Vec2& p_b, const Vec2& v_b, double r_b,
                        double dt) {
  // |d + w t|^2 is a convex quadratic in t; clamp its vertex to the interval.
  const Vec2 d = p_a - p_b;
  const Vec2 w = v_a - v_b;
  const double ww = w.squared_norm();
  double t = 0.0;
  if (ww > 0.0) {
    t = std::clamp(-dot(d, w) / ww, 0.0, dt);
  }
  return (d + w * t).norm() - (r_a + r_b);
}

}  // namespace crowdnav
