#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdnav::test {

JointState random_joint(std::mt19937_64& rng, int n_humans) {
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  std::uniform_real_distribution<double> pos(-6.0, 6.0);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  std::uniform_real_distribution<double> rad(0.2, 0.4);
  JointState joint;
  joint.robot = {dist(rng), 1.0, vel(rng), vel(rng), rad(rng)};
  for (int i = 0; i < n_humans; ++i) {
    HumanObservedState h;
    h.px = pos(rng);
    h.py = pos(rng);
    h.dist = std::hypot(h.px, h.py);
    h.vx = vel(rng);
    h.vy = vel(rng);
    h.radius = rad(rng);
    h.radius_sum = h.radius + joint.robot.radius;
    joint.humans.push_back(h);
  }
  return joint;
}

World random_world(std::mt19937_64& rng, int n_humans) {
  std::uniform_real_distribution<double> pos(-3.0, 3.0);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  World world;
  world.robot.position = {pos(rng), pos(rng)};
  world.robot.goal = {pos(rng), pos(rng)};
  world.robot.velocity = {vel(rng), vel(rng)};
  for (int i = 0; i < n_humans; ++i) {
    WorldAgentState h;
    h.position = {pos(rng), pos(rng)};
    h.velocity = {vel(rng), vel(rng)};
    h.goal = -h.position;
    world.humans.push_back(h);
  }
  return world;
}

namespace {

using Row = std::vector<double>;

class Params {
 public:
  explicit Params(const ValueNetwork& net) {
    for (const auto& t : net.tensors()) by_name_[t.name] = &t.value;
  }

  Row dense(const std::string& prefix, int layer, const Row& x, bool relu) const {
    const auto& w = get(prefix + "." + std::to_string(layer) + ".weight");
    const auto& b = get(prefix + "." + std::to_string(layer) + ".bias");
    if (static_cast<std::size_t>(w.rows()) != x.size()) throw std::logic_error("reference: width mismatch");
    Row y(static_cast<std::size_t>(w.cols()));
    for (std::size_t o = 0; o < y.size(); ++o) {
      double acc = b(0, static_cast<Eigen::Index>(o));
      for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o));
      y[o] = relu ? std::max(acc, 0.0) : acc;
    }
    return y;
  }

  Row mlp(const std::string& prefix, std::size_t layers, Row x, bool last_relu) const {
    for (std::size_t l = 0; l < layers; ++l) x = dense(prefix, static_cast<int>(l), x, l + 1 < layers || last_relu);
    return x;
  }

 private:
  const Eigen::MatrixXd& get(const std::string& name) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::logic_error("reference: missing tensor " + name);
    return *it->second;
  }
  std::map<std::string, const Eigen::MatrixXd*> by_name_;
};

}  // namespace

double reference_forward(const ValueNetwork& net, const JointState& joint) {
  const Params p(net);
  const auto& shape = net.shape();
  const Row robot{joint.robot.d_g, joint.robot.v_pref, joint.robot.vx, joint.robot.vy, joint.robot.radius};

  std::vector<Row> embeddings;
  for (const auto& h : joint.humans) {
    Row pair = robot;
    for (double v : {h.dist, h.px, h.py, h.vx, h.vy, h.radius, h.radius_sum}) pair.push_back(v);
    embeddings.push_back(p.mlp("embedding", shape.embedding.size(), pair, true));
  }

  Row crowd(static_cast<std::size_t>(shape.feature.back()), 0.0);
  if (!embeddings.empty()) {
    Row mean(embeddings[0].size(), 0.0);
    for (const auto& e : embeddings) {
      for (std::size_t k = 0; k < e.size(); ++k) mean[k] += e[k] / static_cast<double>(embeddings.size());
    }
    std::vector<double> scores;
    for (const auto& e : embeddings) {
      Row in = e;
      in.insert(in.end(), mean.begin(), mean.end());
      scores.push_back(p.mlp("attention", shape.attention.size(), in, false)[0]);
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - top);
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      const Row f = p.mlp("feature", shape.feature.size(), embeddings[i], false);
      const double a = std::exp(scores[i] - top) / z;
      for (std::size_t k = 0; k < f.size(); ++k) crowd[k] += a * f[k];
    }
  }
  Row value_in = robot;
  value_in.insert(value_in.end(), crowd.begin(), crowd.end());
  return p.mlp("value", shape.value.size(), value_in, false)[0];
}

double max_fd_relative_error(const ValueNetwork& base, std::mt19937_64& rng, int states, int params) {
  ValueNetwork net = base;
  auto grads = net.make_gradient_buffer();
  std::uniform_int_distribution<int> humans(1, 5);
  std::uniform_real_distribution<double> target_dist(-1.0, 1.0);
  const double h = 1e-5;
  double worst = 0.0;

  // Draw parameters uniformly over all scalars, not over tensors.
  std::vector<std::size_t> sizes;
  std::size_t total = 0;
  for (const auto& t : net.tensors()) {
    sizes.push_back(static_cast<std::size_t>(t.value.size()));
    total += sizes.back();
  }
  std::uniform_int_distribution<std::size_t> flat(0, total - 1);

  for (int s = 0; s < states; ++s) {
    const JointState joint = random_joint(rng, humans(rng));
    const double target = target_dist(rng);
    net.backward(joint, target, grads);
    for (int k = 0; k < params; ++k) {
      std::size_t index = flat(rng);
      std::size_t t = 0;
      while (index >= sizes[t]) index -= sizes[t++];
      double& w = net.tensors()[t].value.data()[index];
      const double saved = w;
      w = saved + h;
      const double v_up = net.forward(joint);
      w = saved - h;
      const double v_down = net.forward(joint);
      w = saved;
      // (a - t)^2 - (b - t)^2 factored to avoid cancelling two rounded squares.
      const double numeric = (v_up - v_down) * (v_up + v_down - 2 * target) / (2 * h);
      const double analytic = grads.grads[t].data()[index];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-7});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  }
  return worst;
}

namespace {

struct Pose {
  double x, y;
};

// Minimum over t in [0, T] of |d + t w| - rsum, via projection of -d onto w.
double separation(Pose d, Pose w, double rsum, double T) {
  const double ww = w.x * w.x + w.y * w.y;
  double t = 0.0;
  if (ww > 0.0) t = std::clamp(-(d.x * w.x + d.y * w.y) / ww, 0.0, T);
  return std::hypot(d.x + t * w.x, d.y + t * w.y) - rsum;
}

JointState transform(const WorldAgentState& robot, const std::vector<WorldAgentState>& humans) {
  const double gx = robot.goal.x - robot.position.x;
  const double gy = robot.goal.y - robot.position.y;
  const double d_g = std::hypot(gx, gy);
  const double theta = d_g > 0.0 ? std::atan2(gy, gx) : 0.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  auto rot = [&](double x, double y) { return Pose{c * x + s * y, -s * x + c * y}; };
  JointState j;
  const Pose v = rot(robot.velocity.x, robot.velocity.y);
  j.robot = {d_g, robot.v_pref, v.x, v.y, robot.radius};
  for (const auto& h : humans) {
    const Pose p = rot(h.position.x - robot.position.x, h.position.y - robot.position.y);
    const Pose hv = rot(h.velocity.x, h.velocity.y);
    j.humans.push_back({std::hypot(p.x, p.y), p.x, p.y, hv.x, hv.y, h.radius, h.radius + robot.radius});
  }
  return j;
}

}  // namespace

std::size_t brute_force_greedy(const World& world, const ValueNetwork& net, const EnvConfig& config) {
  const double g = std::pow(config.gamma, config.dt * config.v_pref);
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < 9; ++k) {
    Pose a{0.0, 0.0};
    if (k > 0) {
      const double heading = std::numbers::pi * static_cast<double>(k - 1) / 4.0;
      a = {config.v_pref * std::cos(heading), config.v_pref * std::sin(heading)};
    }
    WorldAgentState robot = world.robot;
    robot.position = {robot.position.x + a.x * config.dt, robot.position.y + a.y * config.dt};
    robot.velocity = {a.x, a.y};
    std::vector<WorldAgentState> humans = world.humans;
    double d_min = std::numeric_limits<double>::infinity();
    for (auto& h : humans) {
      const Pose d{world.robot.position.x - h.position.x, world.robot.position.y - h.position.y};
      const Pose w{a.x - h.velocity.x, a.y - h.velocity.y};
      d_min = std::min(d_min, separation(d, w, world.robot.radius + h.radius, config.dt));
      h.position = {h.position.x + h.velocity.x * config.dt, h.position.y + h.velocity.y * config.dt};
    }
    const double d_g = std::hypot(robot.goal.x - robot.position.x, robot.goal.y - robot.position.y);
    const bool reached = d_g < robot.radius;
    const bool shaped = config.reward_mode == RewardMode::Shaped;
    double r = 0.0;
    if (d_min < 0.0) {
      r = shaped ? -1.0 : -0.25;
    } else if (d_min > 0.0 && d_min < config.discomfort_dist) {
      r = 0.5 * (d_min - config.discomfort_dist);
    } else if (reached) {
      r = shaped ? 2.0 : 1.0;
    } else if (shaped) {
      r = -config.alpha * d_g;
    }
    const double value = r + g * net.forward(transform(robot, humans));
    if (value > best_value) {
      best_value = value;
      best = k;
    }
  }
  return best;
}

}  // namespace crowdnav::test
