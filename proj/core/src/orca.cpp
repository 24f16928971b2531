#include "crowdnav/orca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crowdnav/errors.hpp"

namespace crowdnav {
namespace {

constexpr double kEpsilon = 1e-9;
// Added to combined radii so that tangential solutions stay clear of
// contact after rounding.
constexpr double kContactGuard = 1e-9;

// Directed line; admissible velocities lie on its left.
struct Line {
  Vec2 point;
  Vec2 direction;
};

Line to_line(const HalfPlane& plane) { return {plane.point, {plane.normal.y, -plane.normal.x}}; }
HalfPlane to_half_plane(const Line& line) { return {line.point, {-line.direction.y, line.direction.x}}; }

Vec2 normalized(const Vec2& v) { return v / v.norm(); }

// Optimises along line `line_no` subject to lines [0, line_no) and the speed disc.
bool linear_program1(std::span<const Line> lines, std::size_t line_no, double radius, const Vec2& opt_velocity,
                     bool direction_opt, Vec2& result) {
  const Line& line = lines[line_no];
  const double dot_product = dot(line.point, line.direction);
  const double discriminant = dot_product * dot_product + radius * radius - line.point.squared_norm();
  if (discriminant < 0.0) {
    return false;
  }
  const double sqrt_discriminant = std::sqrt(discriminant);
  double t_left = -dot_product - sqrt_discriminant;
  double t_right = -dot_product + sqrt_discriminant;

  for (std::size_t i = 0; i < line_no; ++i) {
    const double denominator = det(line.direction, lines[i].direction);
    const double numerator = det(lines[i].direction, line.point - lines[i].point);
    if (std::fabs(denominator) <= kEpsilon) {
      // parallel
      if (numerator < 0.0) {
        return false;
      }
      continue;
    }
    const double t = numerator / denominator;
    if (denominator >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) {
      return false;
    }
  }

  if (direction_opt) {
    result = line.point + line.direction * (dot(opt_velocity, line.direction) > 0.0 ? t_right : t_left);
  } else {
    const double t = std::clamp(dot(line.direction, opt_velocity - line.point), t_left, t_right);
    result = line.point + line.direction * t;
  }
  return true;
}

// Returns the index of the first line that cannot be satisfied, or lines.size().
std::size_t linear_program2(std::span<const Line> lines, double radius, const Vec2& opt_velocity, bool direction_opt,
                            Vec2& result) {
  if (direction_opt) {
    result = opt_velocity * radius;
  } else if (opt_velocity.squared_norm() > radius * radius) {
    result = normalized(opt_velocity) * radius;
  } else {
    result = opt_velocity;
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) > 0.0) {
      const Vec2 previous = result;
      if (!linear_program1(lines, i, radius, opt_velocity, direction_opt, result)) {
        result = previous;
        return i;
      }
    }
  }
  return lines.size();
}

// Minimises the maximum violation over lines [begin_line, end).
void linear_program3(std::span<const Line> lines, std::size_t begin_line, double radius, Vec2& result) {
  double violation = 0.0;
  std::vector<Line> projected;
  for (std::size_t i = begin_line; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) <= violation) {
      continue;
    }
    projected.clear();
    for (std::size_t j = 0; j < i; ++j) {
      Line line;
      const double determinant = det(lines[i].direction, lines[j].direction);
      if (std::fabs(determinant) <= kEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) {
          continue;
        }
        line.point = (lines[i].point + lines[j].point) * 0.5;
      } else {
        line.point = lines[i].point +
                     lines[i].direction * (det(lines[j].direction, lines[i].point - lines[j].point) / determinant);
      }
      line.direction = normalized(lines[j].direction - lines[i].direction);
      projected.push_back(line);
    }

    const Vec2 previous = result;
    if (linear_program2(projected, radius, Vec2{-lines[i].direction.y, lines[i].direction.x}, true, result) <
        projected.size()) {
      // Only reachable through round-off; the previous result is already feasible.
      result = previous;
    }
    violation = det(lines[i].direction, lines[i].point - result);
  }
}

}  // namespace

void OrcaParams::validate() const {
  if (!(time_horizon > 0.0)) throw ConfigError("orca.time_horizon", "must be > 0");
  if (!(neighbor_dist > 0.0)) throw ConfigError("orca.neighbor_dist", "must be > 0");
  if (!(max_speed > 0.0)) throw ConfigError("orca.max_speed", "must be > 0");
  if (!(safety_margin >= 0.0)) throw ConfigError("orca.safety_margin", "must be >= 0");
  if (!(responsibility > 0.0 && responsibility <= 1.0)) throw ConfigError("orca.responsibility", "must be in (0, 1]");
}

Vec2 preferred_velocity(const WorldAgentState& agent) {
  const Vec2 to_goal = agent.goal - agent.position;
  const double len = to_goal.norm();
  if (len == 0.0) {
    return {};
  }
  return to_goal * (agent.v_pref / len);
}

std::vector<HalfPlane> orca_half_planes(const WorldAgentState& self, std::span<const WorldAgentState> neighbors,
                                        const OrcaParams& params, double dt, std::span<const double> responsibility) {
  if (!responsibility.empty() && responsibility.size() != neighbors.size()) {
    throw ContractError("one responsibility per neighbor required");
  }
  std::vector<HalfPlane> planes;
  planes.reserve(neighbors.size());
  const double inv_horizon = 1.0 / params.time_horizon;
  const double range_sq = params.neighbor_dist * params.neighbor_dist;

  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    const WorldAgentState& other = neighbors[k];
    const Vec2 rel_position = other.position - self.position;
    const double dist_sq = rel_position.squared_norm();
    if (dist_sq >= range_sq) {
      continue;
    }
    const Vec2 rel_velocity = self.velocity - other.velocity;
    const double combined_radius = self.radius + other.radius + params.safety_margin + kContactGuard;
    const double combined_radius_sq = combined_radius * combined_radius;

    Line line;
    Vec2 u;
    if (dist_sq > combined_radius_sq) {
      // w: from the truncation disc centre to the relative velocity
      const Vec2 w = rel_velocity - rel_position * inv_horizon;
      const double w_length_sq = w.squared_norm();
      const double dot_product = dot(w, rel_position);

      if (dot_product < 0.0 && dot_product * dot_product > combined_radius_sq * w_length_sq) {
        // project on the truncation disc
        const double w_length = std::sqrt(w_length_sq);
        const Vec2 unit_w = w / w_length;
        line.direction = {unit_w.y, -unit_w.x};
        u = unit_w * (combined_radius * inv_horizon - w_length);
      } else {
        // project on a leg of the cone
        const double leg = std::sqrt(dist_sq - combined_radius_sq);
        if (det(rel_position, w) > 0.0) {
          line.direction = Vec2{rel_position.x * leg - rel_position.y * combined_radius,
                                rel_position.x * combined_radius + rel_position.y * leg} /
                           dist_sq;
        } else {
          line.direction = -Vec2{rel_position.x * leg + rel_position.y * combined_radius,
                                 -rel_position.x * combined_radius + rel_position.y * leg} /
                           dist_sq;
        }
        u = line.direction * dot(rel_velocity, line.direction) - rel_velocity;
      }
    } else {
      // Already overlapping: resolve within one step.
      const double inv_dt = 1.0 / dt;
      const Vec2 w = rel_velocity - rel_position * inv_dt;
      const double w_length = w.norm();
      const Vec2 unit_w = w_length > 0.0 ? w / w_length : Vec2{-rel_position.x, -rel_position.y} / std::sqrt(dist_sq);
      line.direction = {unit_w.y, -unit_w.x};
      u = unit_w * (combined_radius * inv_dt - w_length);
    }
    line.point = self.velocity + u * (responsibility.empty() ? params.responsibility : responsibility[k]);
    planes.push_back(to_half_plane(line));
  }
  return planes;
}

namespace {

// LP2 on `planes`; on infeasibility fills `result` with the LP3 solution and returns false.
bool solve_program(std::span<const HalfPlane> planes, double max_speed, const Vec2& preferred, Vec2& result) {
  if (planes.empty() && preferred.norm() <= max_speed + kEpsilon) {
    result = preferred;
    return true;
  }
  std::vector<Line> lines;
  lines.reserve(planes.size());
  for (const auto& plane : planes) {
    lines.push_back(to_line(plane));
  }
  const std::size_t fail = linear_program2(lines, max_speed, preferred, false, result);
  if (fail < lines.size()) {
    linear_program3(lines, fail, max_speed, result);
    return false;
  }
  return true;
}

}  // namespace

Vec2 solve_orca_program(std::span<const HalfPlane> planes, double max_speed, const Vec2& preferred) {
  Vec2 result;
  solve_program(planes, max_speed, preferred, result);
  return result;
}

Vec2 orca_velocity(const WorldAgentState& self, std::span<const WorldAgentState> neighbors, const OrcaParams& params,
                   double dt, std::span<const double> responsibility) {
  const Vec2 preferred = preferred_velocity(self);
  OrcaParams horizon = params;
  while (true) {
    const auto planes = orca_half_planes(self, neighbors, horizon, dt, responsibility);
    Vec2 result;
    if (solve_program(planes, params.max_speed, preferred, result) || horizon.time_horizon <= dt) return result;
    horizon.time_horizon = std::max(dt, 0.5 * horizon.time_horizon);
  }
}

std::vector<WorldAgentState> step_humans(std::span<const WorldAgentState> humans, const OrcaParams& params, double dt) {
  std::vector<WorldAgentState> next(humans.begin(), humans.end());
  std::vector<bool> arrived(humans.size());
  for (std::size_t i = 0; i < humans.size(); ++i) {
    arrived[i] = distance(humans[i].position, humans[i].goal) < humans[i].radius;
  }
  // Arrived humans stand still, so their neighbours avoid them alone.
  std::vector<WorldAgentState> others;
  std::vector<double> share;
  others.reserve(humans.size());
  share.reserve(humans.size());
  for (std::size_t i = 0; i < humans.size(); ++i) {
    if (arrived[i]) {
      next[i].velocity = {};
      continue;
    }
    others.clear();
    share.clear();
    for (std::size_t j = 0; j < humans.size(); ++j) {
      if (j == i) continue;
      others.push_back(humans[j]);
      if (arrived[j]) others.back().velocity = {};
      share.push_back(arrived[j] ? 1.0 : params.responsibility);
    }
    next[i].velocity = orca_velocity(humans[i], others, params, dt, share);
  }
  for (auto& human : next) {
    human.position += human.velocity * dt;
  }
  return next;
}

}  // namespace crowdnav
