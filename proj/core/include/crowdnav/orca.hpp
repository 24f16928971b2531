#pragma once

#include <span>
#include <vector>

#include "crowdnav/geometry.hpp"

namespace crowdnav {

struct OrcaParams {
  double time_horizon = 5.0;
  double neighbor_dist = 10.0;
  double max_speed = 1.0;
  /// Extra clearance planned around every neighbor; collisions are still judged
  /// on the true radii.
  double safety_margin = 0.01;
  /// Share of the avoidance manoeuvre this agent performs: 0.5 when the
  /// neighbor reciprocates, 1.0 when the neighbor ignores us.
  double responsibility = 0.5;

  void validate() const;
};

/// Velocities v with dot(v - point, normal) >= 0 are admissible.
struct HalfPlane {
  Vec2 point;
  Vec2 normal;
};

/// Unit vector toward the goal scaled by v_pref; zero at the goal.
Vec2 preferred_velocity(const WorldAgentState& agent);

/// ORCA half-planes induced by `neighbors`, in neighbor index order. Neighbors
/// farther than params.neighbor_dist are skipped.
/// `responsibility`, when non-empty, overrides params.responsibility per neighbor
/// (1 for a neighbor that will not move out of the way).
std::vector<HalfPlane> orca_half_planes(const WorldAgentState& self, std::span<const WorldAgentState> neighbors,
                                        const OrcaParams& params, double dt,
                                        std::span<const double> responsibility = {});

/// Velocity closest to `preferred` inside the max-speed disc satisfying every
/// half-plane. If the constraints are jointly infeasible, returns the velocity
/// minimising the largest violation instead.
Vec2 solve_orca_program(std::span<const HalfPlane> planes, double max_speed, const Vec2& preferred);

/// Velocity for `self` against `neighbors`. When the program is infeasible the
/// time horizon is halved (down to dt) before settling for the least-violation
/// solution.
Vec2 orca_velocity(const WorldAgentState& self, std::span<const WorldAgentState> neighbors, const OrcaParams& params,
                   double dt, std::span<const double> responsibility = {});

/// Advances every human by dt. Each human reacts to the other humans only; a
/// human within its own radius of its goal stops there.
std::vector<WorldAgentState> step_humans(std::span<const WorldAgentState> humans, const OrcaParams& params, double dt);

}  // namespace crowdnav
