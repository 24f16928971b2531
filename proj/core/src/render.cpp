#include "crowdnav/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>

namespace crowdnav {
namespace {

std::string num(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

const char* kHumanColors[] = {"#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr const char* kRobotColor = "#d62728";

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(const Vec2& p, double pad) {
    x0 = std::min(x0, p.x - pad);
    y0 = std::min(y0, p.y - pad);
    x1 = std::max(x1, p.x + pad);
    y1 = std::max(y1, p.y + pad);
  }
};

std::vector<const World*> worlds(const EpisodeRecord& record) {
  std::vector<const World*> out;
  for (const auto& s : record.steps) out.push_back(&s.world);
  out.push_back(&record.final_world);
  return out;
}

}  // namespace

std::string render_trajectory_svg(const EpisodeRecord& record, const TrajectoryStyle& style) {
  const auto frames = worlds(record);
  const World& first = *frames.front();
  Bounds b;
  for (const World* w : frames) {
    b.add(w->robot.position, w->robot.radius);
    for (const auto& h : w->humans) b.add(h.position, h.radius);
  }
  b.add(first.robot.goal, first.robot.radius);
  for (const auto& h : first.humans) b.add(h.goal, h.radius);
  const double margin = 0.5;
  const double s = style.pixels_per_meter;
  const double width = (b.x1 - b.x0 + 2 * margin) * s;
  const double height = (b.y1 - b.y0 + 2 * margin) * s;
  auto px = [&](const Vec2& p) { return std::pair{(p.x - b.x0 + margin) * s, (b.y1 + margin - p.y) * s}; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
                    "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto agent_track = [&](auto&& get, const std::string& color, const std::string& name) {
    svg += "<g class=\"agent\" id=\"" + name + "\">\n<polyline fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\" points=\"";
    for (const World* w : frames) {
      const auto [x, y] = px(get(*w).position);
      svg += num(x) + "," + num(y) + " ";
    }
    svg += "\"/>\n";
    const auto& goal = get(first).goal;
    const auto [gx, gy] = px(goal);
    svg += "<path class=\"goal\" d=\"M" + num(gx - 5) + " " + num(gy - 5) + " L" + num(gx + 5) + " " + num(gy + 5) +
           " M" + num(gx - 5) + " " + num(gy + 5) + " L" + num(gx + 5) + " " + num(gy - 5) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const bool last = k + 1 == frames.size();
      if (k % static_cast<std::size_t>(std::max(style.label_every, 1)) != 0 && !last) continue;
      const auto& a = get(*frames[k]);
      const auto [x, y] = px(a.position);
      svg += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(a.radius * s) + "\" fill=\"" + color +
             "\" fill-opacity=\"0.15\" stroke=\"" + color + "\"/>\n";
      svg += "<text class=\"time\" x=\"" + num(x) + "\" y=\"" + num(y + 4) +
             "\" font-size=\"11\" text-anchor=\"middle\">" + num(frames[k]->time, 1) +
             "</text>\n";
    }
    svg += "</g>\n";
  };

  agent_track([](const World& w) -> const WorldAgentState& { return w.robot; }, kRobotColor, "robot");
  for (std::size_t i = 0; i < first.humans.size(); ++i) {
    agent_track([i](const World& w) -> const WorldAgentState& { return w.humans[i]; },
                kHumanColors[i % std::size(kHumanColors)], "human" + std::to_string(i));
  }
  svg += "<text x=\"8\" y=\"18\" font-size=\"13\">outcome " + std::string(to_string(record.outcome)) + ", time " +
         num(record.nav_time) + " s</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::string render_curves_svg(const std::vector<CurveRow>& rows, const CurveStyle& style) {
  struct Point {
    double x, y;
  };
  std::vector<Point> train_success, train_collision, train_reward;
  std::map<int, std::array<double, 4>> sweeps;  // episode -> successes, collisions, reward, count
  std::deque<const CurveRow*> window;
  double win_success = 0, win_collision = 0, win_reward = 0;
  for (const auto& row : rows) {
    if (row.phase == CurvePhase::Validation) {
      auto& acc = sweeps[row.episode];
      acc[0] += row.outcome == Outcome::ReachGoal;
      acc[1] += row.outcome == Outcome::Collision;
      acc[2] += row.discounted_reward;
      acc[3] += 1;
      continue;
    }
    if (row.phase != CurvePhase::Train) continue;
    window.push_back(&row);
    win_success += row.outcome == Outcome::ReachGoal;
    win_collision += row.outcome == Outcome::Collision;
    win_reward += row.discounted_reward;
    if (static_cast<int>(window.size()) > std::max(style.window, 1)) {
      const CurveRow* old = window.front();
      window.pop_front();
      win_success -= old->outcome == Outcome::ReachGoal;
      win_collision -= old->outcome == Outcome::Collision;
      win_reward -= old->discounted_reward;
    }
    const double n = static_cast<double>(window.size());
    train_success.push_back({double(row.episode), win_success / n});
    train_collision.push_back({double(row.episode), win_collision / n});
    train_reward.push_back({double(row.episode), win_reward / n});
  }
  std::vector<Point> val_success, val_collision, val_reward;
  for (const auto& [episode, acc] : sweeps) {
    val_success.push_back({double(episode), acc[0] / acc[3]});
    val_collision.push_back({double(episode), acc[1] / acc[3]});
    val_reward.push_back({double(episode), acc[2] / acc[3]});
  }

  double x_max = 1.0;
  double r_min = 0.0, r_max = 0.0;
  for (const auto* series : {&train_reward, &val_reward}) {
    for (const auto& p : *series) {
      x_max = std::max(x_max, p.x);
      r_min = std::min(r_min, p.y);
      r_max = std::max(r_max, p.y);
    }
  }
  if (r_max - r_min < 1e-9) r_max = r_min + 1.0;

  const double left = 60, right = 20, top = 30, gap = 50;
  const double w = style.width - left - right;
  const double h = style.panel_height;
  const double total_height = top + 2 * h + gap + 40;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(style.width) + "\" height=\"" +
                    num(total_height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto panel = [&](double y0, double lo, double hi, const std::string& title) {
    svg += "<rect x=\"" + num(left) + "\" y=\"" + num(y0) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(left) + "\" y=\"" + num(y0 - 8) + "\" font-size=\"13\">" + title + "</text>\n";
    svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y0 + 10) + "\" font-size=\"11\" text-anchor=\"end\">" +
           num(hi) + "</text>\n";
    svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y0 + h) + "\" font-size=\"11\" text-anchor=\"end\">" +
           num(lo) + "</text>\n";
    svg += "<text x=\"" + num(left + w) + "\" y=\"" + num(y0 + h + 14) + "\" font-size=\"11\" text-anchor=\"end\">" +
           std::to_string(static_cast<long>(x_max)) + "</text>\n";
  };
  auto map = [&](const Point& p, double y0, double lo, double hi) {
    return std::pair{left + w * p.x / x_max, y0 + h * (1.0 - (p.y - lo) / (hi - lo))};
  };
  auto line = [&](const std::vector<Point>& pts, double y0, double lo, double hi, const char* color,
                  const std::string& cls) {
    if (pts.size() >= 2) {
      svg += "<polyline class=\"" + cls + "\" fill=\"none\" stroke=\"" + color + "\" points=\"";
      for (const auto& p : pts) {
        const auto [x, y] = map(p, y0, lo, hi);
        svg += num(x) + "," + num(y) + " ";
      }
      svg += "\"/>\n";
    } else {
      for (const auto& p : pts) {
        const auto [x, y] = map(p, y0, lo, hi);
        svg += "<circle class=\"" + cls + "\" cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"3\" fill=\"" + color +
               "\"/>\n";
      }
    }
  };
  auto markers = [&](const std::vector<Point>& pts, double y0, double lo, double hi, const char* color,
                     const std::string& cls) {
    for (const auto& p : pts) {
      const auto [x, y] = map(p, y0, lo, hi);
      svg += "<circle class=\"" + cls + "\" cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"3.5\" fill=\"white\" stroke=\"" +
             color + "\"/>\n";
    }
  };

  const double y_rates = top;
  const double y_reward = top + h + gap;
  panel(y_rates, 0.0, 1.0, "success (green) / collision (red) rate");
  line(train_success, y_rates, 0.0, 1.0, "#2ca02c", "train-success");
  line(train_collision, y_rates, 0.0, 1.0, "#d62728", "train-collision");
  markers(val_success, y_rates, 0.0, 1.0, "#2ca02c", "val-success");
  markers(val_collision, y_rates, 0.0, 1.0, "#d62728", "val-collision");
  panel(y_reward, r_min, r_max, "discounted reward");
  line(train_reward, y_reward, r_min, r_max, "#1f77b4", "train-reward");
  markers(val_reward, y_reward, r_min, r_max, "#1f77b4", "val-reward");
  svg += "<text x=\"" + num(left + w / 2) + "\" y=\"" + num(total_height - 8) +
         "\" font-size=\"12\" text-anchor=\"middle\">episode</text>\n</svg>\n";
  return svg;
}

}  // namespace crowdnav
