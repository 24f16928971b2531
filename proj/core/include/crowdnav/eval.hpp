#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crowdnav/env.hpp"
#include "crowdnav/policy.hpp"
#include "crowdnav/value_network.hpp"

namespace crowdnav {

struct EvalReport {
  int episodes = 0;
  std::uint64_t seed_base = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  /// Discomfort steps per episode; may exceed 1.
  double danger_freq = 0.0;
  /// Mean over successful episodes only; NaN when there were none.
  double mean_nav_time = 0.0;
  /// Discounted return under the sparse reward, whatever reward the policy trained on.
  double mean_discounted_reward = 0.0;

  bool operator==(const EvalReport& other) const;
};

/// Discounted return of `record` rescored with the sparse reward.
double sparse_return(const EpisodeRecord& record, const EnvConfig& config);

/// Runs `episodes` episodes with environment seeds seed_base + i. The policy
/// sees `config` unchanged (including its reward mode for lookahead).
EvalReport evaluate(const Policy& policy, const EnvConfig& config, int episodes, std::uint64_t seed_base);
/// Greedy (epsilon = 0) value policy.
EvalReport evaluate(const ValueNetwork& net, const EnvConfig& config, int episodes, std::uint64_t seed_base);

struct TrajectorySummary {
  Outcome outcome = Outcome::Timeout;
  double nav_time = 0.0;
  double path_length = 0.0;
  bool collided = false;
};

struct CapturedTrajectory {
  EpisodeRecord record;
  TrajectorySummary summary;
};

CapturedTrajectory capture_trajectory(const Policy& policy, const EnvConfig& config, std::uint64_t seed);
CapturedTrajectory capture_trajectory(const ValueNetwork& net, const EnvConfig& config, std::uint64_t seed);

/// One row of a method comparison. `load` produces the policy parameters
/// (usually by reading a checkpoint); a throw marks only this row as failed.
struct ComparisonEntry {
  std::string demo;    // "use" or "none"
  std::string method;  // e.g. "RL+HER+CL"
  EnvConfig env;
  std::function<ValueNetwork()> load;
};

struct ComparisonRow {
  std::string demo;
  std::string method;
  std::optional<EvalReport> report;
  std::string error;
};

/// Evaluates every entry on the same seed set.
std::vector<ComparisonRow> compare_methods(const std::vector<ComparisonEntry>& entries, int episodes,
                                           std::uint64_t seed_base);

/// Structured text: a header line, then one `row ...` line per method with key-value pairs.
void write_report_text(std::ostream& out, const std::vector<ComparisonRow>& rows);
/// Delimiter-separated table for plotting; failed rows keep their error message.
void write_report_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

}  // namespace crowdnav
