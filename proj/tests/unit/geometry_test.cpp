#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "crowdnav/geometry.hpp"

namespace crowdnav {
namespace {

WorldAgentState agent(Vec2 p, Vec2 v, double r = 0.3, Vec2 goal = {}, double v_pref = 1.0) {
  return {p, v, r, goal, v_pref};
}

// Brute-force oracle: minimum over uniformly spaced time samples.
double sampled_min_separation(Vec2 pa, Vec2 va, double ra, Vec2 pb, Vec2 vb, double rb, double dt, int samples) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= samples; ++k) {
    const double t = dt * k / samples;
    best = std::min(best, ((pa + va * t) - (pb + vb * t)).norm());
  }
  return best - (ra + rb);
}

TEST(RobotCentric, AlignedFrameLeavesStateUntouched) {
  const auto joint = to_robot_centric(agent({0, 0}, {1, 0}, 0.3, {4, 0}, 1.0), {});
  EXPECT_EQ(joint.robot, (RobotSelfState{4.0, 1.0, 1.0, 0.0, 0.3}));
  EXPECT_TRUE(joint.humans.empty());
}

TEST(RobotCentric, GoalAlongWorldYRotatesVelocity) {
  const auto joint = to_robot_centric(agent({0, -4}, {0, 1}, 0.3, {0, 4}), {});
  EXPECT_DOUBLE_EQ(joint.robot.d_g, 8.0);
  EXPECT_NEAR(joint.robot.vx, 1.0, 1e-12);
  EXPECT_NEAR(joint.robot.vy, 0.0, 1e-12);
}

TEST(RobotCentric, HumanObservationMatchesHandRotation) {
  const std::vector<WorldAgentState> humans{agent({1, 0}, {0, 0}, 0.3)};
  const auto joint = to_robot_centric(agent({0, 0}, {0, 0}, 0.3, {0, 4}), humans);
  ASSERT_EQ(joint.humans.size(), 1u);
  const auto& h = joint.humans[0];
  EXPECT_NEAR(h.dist, 1.0, 1e-12);
  EXPECT_NEAR(h.px, 0.0, 1e-12);
  EXPECT_NEAR(h.py, -1.0, 1e-12);
  EXPECT_NEAR(h.vx, 0.0, 1e-12);
  EXPECT_NEAR(h.vy, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(h.radius, 0.3);
  EXPECT_DOUBLE_EQ(h.radius_sum, 0.6);
}

TEST(RobotCentric, RobotOnGoalUsesWorldXAxis) {
  const std::vector<WorldAgentState> humans{agent({1, 2}, {0.5, 0}, 0.3)};
  const auto joint = to_robot_centric(agent({0, 0}, {0, 1}, 0.3, {0, 0}), humans);
  EXPECT_EQ(joint.robot.d_g, 0.0);
  EXPECT_EQ(joint.robot.vx, 0.0);
  EXPECT_EQ(joint.robot.vy, 1.0);
  EXPECT_EQ(joint.humans[0].px, 1.0);
  EXPECT_EQ(joint.humans[0].py, 2.0);
  for (double v : joint.flatten()) EXPECT_TRUE(std::isfinite(v));
}

TEST(RobotCentric, InvariantUnderRigidWorldTransforms) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi);
  for (int trial = 0; trial < 200; ++trial) {
    auto robot = agent({u(rng), u(rng)}, {u(rng) / 5, u(rng) / 5}, 0.3, {u(rng), u(rng)});
    std::vector<WorldAgentState> humans;
    for (int i = 0; i < 4; ++i) humans.push_back(agent({u(rng), u(rng)}, {u(rng) / 5, u(rng) / 5}, 0.2 + i * 0.05));
    const auto base = to_robot_centric(robot, humans).flatten();

    const double th = ang(rng);
    const Vec2 shift{u(rng), u(rng)};
    auto rot = [&](Vec2 v) { return Vec2{std::cos(th) * v.x - std::sin(th) * v.y, std::sin(th) * v.x + std::cos(th) * v.y}; };
    robot.position = rot(robot.position) + shift;
    robot.goal = rot(robot.goal) + shift;
    robot.velocity = rot(robot.velocity);
    for (auto& h : humans) {
      h.position = rot(h.position) + shift;
      h.velocity = rot(h.velocity);
    }
    const auto moved = to_robot_centric(robot, humans).flatten();
    ASSERT_EQ(base.size(), moved.size());
    for (std::size_t k = 0; k < base.size(); ++k) EXPECT_NEAR(base[k], moved[k], 1e-9) << "component " << k;
  }
}

TEST(RobotCentric, FlattenedWidthIsFivePlusSevenN) {
  for (int n = 0; n <= 10; ++n) {
    std::vector<WorldAgentState> humans(static_cast<std::size_t>(n), agent({1, 1}, {}, 0.3));
    const auto joint = to_robot_centric(agent({0, 0}, {}, 0.3, {0, 4}), humans);
    EXPECT_EQ(joint.flatten().size(), 5u + 7u * static_cast<std::size_t>(n));
    EXPECT_EQ(joint.width(), joint.flatten().size());
  }
}

TEST(RobotCentric, HumanDistanceMatchesRelativePosition) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  std::vector<WorldAgentState> humans;
  for (int i = 0; i < 10; ++i) humans.push_back(agent({u(rng), u(rng)}, {}, 0.3));
  const auto joint = to_robot_centric(agent({u(rng), u(rng)}, {}, 0.3, {u(rng), u(rng)}), humans);
  for (const auto& h : joint.humans) EXPECT_NEAR(h.dist, std::hypot(h.px, h.py), 1e-9);
}

TEST(PropagateCvm, MovesRobotWithActionAndHumansWithOwnVelocity) {
  const std::vector<WorldAgentState> humans{agent({1, 1}, {-1, 0})};
  const auto [robot, next] = propagate_cvm(agent({0, 0}, {0, 1}), humans, {1, 0}, 0.25);
  EXPECT_EQ(robot.position, (Vec2{0.25, 0.0}));
  EXPECT_EQ(robot.velocity, (Vec2{1.0, 0.0}));
  EXPECT_EQ(next[0].position, (Vec2{0.75, 1.0}));
  EXPECT_EQ(next[0].velocity, (Vec2{-1.0, 0.0}));
}

TEST(PropagateCvm, StopActionHoldsRobot) {
  const auto [robot, next] = propagate_cvm(agent({2, 3}, {1, 1}), {}, {0, 0}, 0.25);
  EXPECT_EQ(robot.position, (Vec2{2, 3}));
  EXPECT_EQ(robot.velocity, (Vec2{0, 0}));
  EXPECT_TRUE(next.empty());
}

TEST(PropagateCvm, HumanMotionComposes) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> d(0.01, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<WorldAgentState> humans{agent({u(rng), u(rng)}, {u(rng), u(rng)}),
                                        agent({u(rng), u(rng)}, {u(rng), u(rng)})};
    const double d1 = d(rng);
    const double d2 = d(rng);
    const auto robot = agent({0, 0}, {});
    const auto [r1, h1] = propagate_cvm(robot, humans, {0, 0}, d1);
    const auto [r2, h2] = propagate_cvm(r1, h1, {0, 0}, d2);
    const auto [r3, h3] = propagate_cvm(robot, humans, {0, 0}, d1 + d2);
    for (std::size_t i = 0; i < humans.size(); ++i) {
      EXPECT_NEAR(h2[i].position.x, h3[i].position.x, 1e-12);
      EXPECT_NEAR(h2[i].position.y, h3[i].position.y, 1e-12);
    }
  }
}

TEST(ClosestApproach, ApproachingStaticDisc) {
  EXPECT_NEAR(closest_approach({0, 0}, {1, 0}, 0.3, {1, 0}, {0, 0}, 0.3, 0.25), 0.15, 1e-12);
}

TEST(ClosestApproach, EqualVelocitiesKeepSeparation) {
  EXPECT_NEAR(closest_approach({0, 0}, {0.7, -0.2}, 0.3, {3, 4}, {0.7, -0.2}, 0.2, 0.25), 5.0 - 0.5, 1e-12);
}

TEST(ClosestApproach, StaticOverlapIsNegative) {
  EXPECT_NEAR(closest_approach({0, 0}, {0, 0}, 0.3, {0.5, 0}, {0, 0}, 0.3, 0.25), -0.1, 1e-12);
}

TEST(ClosestApproach, MatchesDenseSampling) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> p(-1.5, 1.5);
  std::uniform_real_distribution<double> v(-2.0, 2.0);
  std::uniform_real_distribution<double> dt(0.05, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Vec2 pa{p(rng), p(rng)}, va{v(rng), v(rng)}, pb{p(rng), p(rng)}, vb{v(rng), v(rng)};
    const double h = dt(rng);
    const double exact = closest_approach(pa, va, 0.3, pb, vb, 0.3, h);
    const double sampled = sampled_min_separation(pa, va, 0.3, pb, vb, 0.3, h, 10000);
    EXPECT_LE(exact, sampled + 1e-12);
    EXPECT_NEAR(exact, sampled, 1e-6);
  }
}

}  // namespace
}  // namespace crowdnav
