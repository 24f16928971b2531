#include <gtest/gtest.h>

#include <regex>
#include <set>

#include "crowdnav/render.hpp"

namespace crowdnav {
namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

TEST(RenderTrajectory, EmptySceneIsOneStraightPath) {
  EnvConfig env;
  env.n_humans = 0;
  std::mt19937_64 rng(0);
  const auto record = run_episode(env, OrcaPolicy(), 0, rng);
  const std::string svg = render_trajectory_svg(record);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_EQ(count(svg, "<polyline"), 1u);
  // All polyline points share one x coordinate: the robot walks straight up.
  const auto start = svg.find("points=\"") + 8;
  const std::string points = svg.substr(start, svg.find('"', start) - start);
  std::set<std::string> xs;
  const std::regex x_coord("([0-9.]+),");
  for (std::sregex_iterator it(points.begin(), points.end(), x_coord), end; it != end; ++it) {
    xs.insert((*it)[1]);
  }
  EXPECT_EQ(xs.size(), 1u);
}

TEST(RenderTrajectory, FiveHumansGetNumberedTimeLabels) {
  EnvConfig env;
  std::mt19937_64 rng(1);
  const auto record = run_episode(env, OrcaPolicy(), 4, rng);
  TrajectoryStyle style;
  style.label_every = 4;
  const std::string svg = render_trajectory_svg(record, style);
  EXPECT_EQ(count(svg, "class=\"agent\""), 6u);
  const std::size_t frames = record.steps.size() + 1;
  const std::size_t per_agent = (frames - 1) / 4 + 1 + ((frames - 1) % 4 != 0);
  EXPECT_EQ(count(svg, "class=\"time\""), 6 * per_agent);
  EXPECT_NE(svg.find(">0.0</text>"), std::string::npos);
  EXPECT_NE(svg.find(">1.0</text>"), std::string::npos);
}

TEST(RenderCurves, SingleRowIsASinglePoint) {
  const std::vector<CurveRow> rows{{1, CurvePhase::Train, Outcome::ReachGoal, 9.0, 0.3, 0.5, 0.01}};
  const std::string svg = render_curves_svg(rows);
  EXPECT_EQ(count(svg, "<polyline"), 0u);
  EXPECT_EQ(count(svg, "class=\"train-success\""), 1u);
  EXPECT_EQ(count(svg, "class=\"train-reward\""), 1u);
}

TEST(RenderCurves, ValidationSweepsBecomeMarkers) {
  std::vector<CurveRow> rows;
  for (int e = 1; e <= 10; ++e) rows.push_back({e, CurvePhase::Train, Outcome::Timeout, 25.0, 0.0, 0.5, 0.1});
  for (int e : {5, 10}) {
    for (int k = 0; k < 4; ++k) {
      rows.push_back({e, CurvePhase::Validation, k < 2 ? Outcome::ReachGoal : Outcome::Collision, 9.0, 0.2, 0.0, 0.0});
    }
  }
  const std::string svg = render_curves_svg(rows);
  EXPECT_EQ(count(svg, "class=\"val-success\""), 2u);
  EXPECT_EQ(count(svg, "class=\"train-success\""), 1u);  // one polyline
}

}  // namespace
}  // namespace crowdnav
