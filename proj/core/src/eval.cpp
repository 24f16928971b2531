#include "crowdnav/eval.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "crowdnav/errors.hpp"
#include "crowdnav/text_format.hpp"
#include "crowdnav/trajectory.hpp"

namespace crowdnav {
namespace {

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

bool EvalReport::operator==(const EvalReport& o) const {
  return episodes == o.episodes && seed_base == o.seed_base && same(success_rate, o.success_rate) &&
         same(collision_rate, o.collision_rate) && same(timeout_rate, o.timeout_rate) &&
         same(danger_freq, o.danger_freq) && same(mean_nav_time, o.mean_nav_time) &&
         same(mean_discounted_reward, o.mean_discounted_reward);
}

double sparse_return(const EpisodeRecord& record, const EnvConfig& config) {
  const double gamma_step = discount_factor(config.gamma, config.dt, config.v_pref);
  double total = 0.0;
  double weight = 1.0;
  for (const auto& s : record.steps) {
    // d_g only matters through `reached`, which the step info already records.
    total += weight * sparse_reward(s.d_min, 0.0, config.discomfort_dist, s.info == StepInfo::ReachGoal);
    weight *= gamma_step;
  }
  return total;
}

EvalReport evaluate(const Policy& policy, const EnvConfig& config, int episodes, std::uint64_t seed_base) {
  if (episodes <= 0) throw ConfigError("eval.episodes", "must be > 0");
  config.validate();
  EvalReport report;
  report.episodes = episodes;
  report.seed_base = seed_base;
  int successes = 0;
  int collisions = 0;
  int timeouts = 0;
  long discomfort = 0;
  double nav_time = 0.0;
  double reward = 0.0;
  for (int i = 0; i < episodes; ++i) {
    const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(i);
    std::mt19937_64 rng(seed);
    const auto record = run_episode(config, policy, seed, rng);
    switch (record.outcome) {
      case Outcome::ReachGoal:
        ++successes;
        nav_time += record.nav_time;
        break;
      case Outcome::Collision: ++collisions; break;
      case Outcome::Timeout: ++timeouts; break;
    }
    discomfort += record.discomfort_count;
    reward += sparse_return(record, config);
  }
  const double n = episodes;
  report.success_rate = successes / n;
  report.collision_rate = collisions / n;
  report.timeout_rate = timeouts / n;
  report.danger_freq = static_cast<double>(discomfort) / n;
  report.mean_nav_time = successes ? nav_time / successes : std::numeric_limits<double>::quiet_NaN();
  report.mean_discounted_reward = reward / n;
  return report;
}

EvalReport evaluate(const ValueNetwork& net, const EnvConfig& config, int episodes, std::uint64_t seed_base) {
  return evaluate(ValuePolicy(net, 0.0), config, episodes, seed_base);
}

CapturedTrajectory capture_trajectory(const Policy& policy, const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  CapturedTrajectory out;
  out.record = run_episode(config, policy, seed, rng);
  out.summary.outcome = out.record.outcome;
  out.summary.nav_time = out.record.nav_time;
  out.summary.path_length = path_length(out.record);
  out.summary.collided = out.record.outcome == Outcome::Collision;
  return out;
}

CapturedTrajectory capture_trajectory(const ValueNetwork& net, const EnvConfig& config, std::uint64_t seed) {
  return capture_trajectory(ValuePolicy(net, 0.0), config, seed);
}

std::vector<ComparisonRow> compare_methods(const std::vector<ComparisonEntry>& entries, int episodes,
                                           std::uint64_t seed_base) {
  std::vector<ComparisonRow> rows;
  for (const auto& entry : entries) {
    ComparisonRow row{entry.demo, entry.method, std::nullopt, {}};
    try {
      if (!entry.load) throw ContractError("no loader for this row");
      const ValueNetwork net = entry.load();
      row.report = evaluate(net, entry.env, episodes, seed_base);
    } catch (const std::exception& e) {
      row.error = one_line(e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_report_text(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "crowdnav-report 1\n";
  for (const auto& row : rows) {
    out << "row demo=" << row.demo << " method=" << row.method;
    if (row.report) {
      const auto& r = *row.report;
      out << " episodes=" << r.episodes << " seed_base=" << r.seed_base << " success=" << format_double(r.success_rate)
          << " collision=" << format_double(r.collision_rate) << " timeout=" << format_double(r.timeout_rate)
          << " danger=" << format_double(r.danger_freq) << " time=" << format_double(r.mean_nav_time)
          << " reward=" << format_double(r.mean_discounted_reward);
    } else {
      out << " error=" << row.error;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing report");
}

void write_report_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "demo,method,episodes,seed_base,success,collision,timeout,danger,time,reward,error\n";
  for (const auto& row : rows) {
    out << row.demo << ',' << row.method << ',';
    if (row.report) {
      const auto& r = *row.report;
      out << r.episodes << ',' << r.seed_base << ',' << format_double(r.success_rate) << ','
          << format_double(r.collision_rate) << ',' << format_double(r.timeout_rate) << ','
          << format_double(r.danger_freq) << ',' << format_double(r.mean_nav_time) << ','
          << format_double(r.mean_discounted_reward) << ",\n";
    } else {
      std::string error = row.error;
      for (char& c : error) {
        if (c == ',') c = ';';
      }
      out << ",,,,,,,," << error << '\n';
    }
  }
  if (!out) throw IoError("failed writing report");
}

}  // namespace crowdnav
