#include "crowdnav/trajectory.hpp"

#include <fstream>
#include <sstream>

#include "crowdnav/errors.hpp"
#include "crowdnav/text_format.hpp"

namespace crowdnav {
namespace {

constexpr const char* kMagic = "crowdnav-trajectory";
constexpr int kVersion = 1;
constexpr const char* kEndTag = "End";

std::string static_line(const WorldAgentState& a) {
  return "radius " + format_double(a.radius) + " v_pref " + format_double(a.v_pref) + " goal " + format_double(a.goal.x) +
         ' ' + format_double(a.goal.y);
}

bool same_static(const WorldAgentState& a, const WorldAgentState& b) {
  return a.radius == b.radius && a.v_pref == b.v_pref && a.goal == b.goal;
}

void append_world(std::string& row, const World& world) {
  row += format_double(world.time);
  auto agent = [&](const WorldAgentState& a) {
    for (double v : {a.position.x, a.position.y, a.velocity.x, a.velocity.y}) {
      row += ' ';
      row += format_double(v);
    }
  };
  agent(world.robot);
  for (const auto& h : world.humans) agent(h);
}

std::string columns_line(std::size_t humans) {
  std::string line = "columns t robot.x robot.y robot.vx robot.vy";
  for (std::size_t i = 0; i < humans; ++i) {
    const std::string h = " h" + std::to_string(i);
    line += h + ".x" + h + ".y" + h + ".vx" + h + ".vy";
  }
  return line + " action action.vx action.vy reward d_min info";
}

// Reads "<label...> radius r v_pref v goal x y" starting at `offset`.
WorldAgentState parse_static(const LineReader& reader, const std::vector<std::string>& tokens, std::size_t offset) {
  if (tokens.size() != offset + 7 || tokens[offset] != "radius" || tokens[offset + 2] != "v_pref" ||
      tokens[offset + 4] != "goal") {
    reader.fail("expected 'radius <r> v_pref <v> goal <x> <y>'");
  }
  WorldAgentState a;
  a.radius = reader.parse_double(tokens[offset + 1]);
  a.v_pref = reader.parse_double(tokens[offset + 3]);
  a.goal = {reader.parse_double(tokens[offset + 5]), reader.parse_double(tokens[offset + 6])};
  if (!(a.radius > 0.0)) reader.fail("radius must be positive");
  return a;
}

std::vector<std::string> keyed(LineReader& reader, const std::string& key, std::size_t count) {
  auto tokens = reader.expect_tokens(key);
  if (tokens.size() != count + 1 || tokens[0] != key) {
    reader.fail("expected '" + key + "' with " + std::to_string(count) + " value(s)");
  }
  return tokens;
}

}  // namespace

void write_trajectory(std::ostream& out, const EpisodeRecord& record) {
  const World& first = record.steps.empty() ? record.final_world : record.steps.front().world;
  const std::size_t n = first.humans.size();
  auto check = [&](const World& w) {
    if (w.humans.size() != n || !same_static(w.robot, first.robot)) {
      throw ContractError("trajectory: agent set or static agent data changes within the episode");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!same_static(w.humans[i], first.humans[i])) {
        throw ContractError("trajectory: human " + std::to_string(i) + " changes radius or goal within the episode");
      }
    }
  };

  std::ostringstream head;
  head << kMagic << ' ' << kVersion << '\n';
  head << "outcome " << to_string(record.outcome) << '\n';
  head << "nav_time " << format_double(record.nav_time) << '\n';
  head << "discomfort_count " << record.discomfort_count << '\n';
  head << "robot " << static_line(first.robot) << '\n';
  head << "humans " << n << '\n';
  for (std::size_t i = 0; i < n; ++i) head << "human " << i << ' ' << static_line(first.humans[i]) << '\n';
  head << columns_line(n) << '\n';

  std::string body;
  for (const auto& s : record.steps) {
    check(s.world);
    std::string row;
    append_world(row, s.world);
    row += ' ' + std::to_string(s.action_index) + ' ' + format_double(s.action.x) + ' ' + format_double(s.action.y) +
           ' ' + format_double(s.reward) + ' ' + format_double(s.d_min) + ' ' + std::string(to_string(s.info));
    body += row + '\n';
  }
  check(record.final_world);
  std::string last;
  append_world(last, record.final_world);
  body += last + " -1 0 0 0 0 " + kEndTag + '\n';

  out << head.str() << body << "checksum " << checksum_hex(body) << '\n';
  if (!out) throw IoError("failed writing trajectory");
}

EpisodeRecord read_trajectory(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  auto magic = reader.expect_tokens("header");
  if (magic.size() != 2 || magic[0] != kMagic) reader.fail("not a trajectory file (bad magic line)");
  if (magic[1] != std::to_string(kVersion)) reader.fail("unsupported trajectory version '" + magic[1] + "'");

  EpisodeRecord record;
  const auto outcome_tokens = keyed(reader, "outcome", 1);
  const auto outcome = parse_outcome(outcome_tokens[1]);
  if (!outcome) reader.fail("unknown outcome '" + outcome_tokens[1] + "'");
  record.outcome = *outcome;
  record.nav_time = reader.parse_double(keyed(reader, "nav_time", 1)[1]);
  record.discomfort_count = static_cast<int>(reader.parse_i64(keyed(reader, "discomfort_count", 1)[1]));

  auto robot_tokens = reader.expect_tokens("robot line");
  if (robot_tokens.empty() || robot_tokens[0] != "robot") reader.fail("expected 'robot radius ...'");
  const WorldAgentState robot = parse_static(reader, robot_tokens, 1);

  const std::uint64_t n = reader.parse_u64(keyed(reader, "humans", 1)[1]);
  if (n > 10000) reader.fail("implausible human count " + std::to_string(n));
  std::vector<WorldAgentState> humans;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto tokens = reader.expect_tokens("human line");
    if (tokens.size() < 2 || tokens[0] != "human" || tokens[1] != std::to_string(i)) {
      reader.fail("expected 'human " + std::to_string(i) + " radius ...'");
    }
    humans.push_back(parse_static(reader, tokens, 2));
  }
  if (reader.expect_line("columns") != columns_line(n)) reader.fail("column line does not match " + std::to_string(n) + " humans");

  const std::size_t width = 5 + 4 * n + 6;
  std::string body;
  bool ended = false;
  while (!ended) {
    const std::string raw = reader.expect_line("step row or final row");
    if (raw.rfind("checksum", 0) == 0) reader.fail("missing final 'End' row");
    body += raw + '\n';
    const auto tokens = split_tokens(raw);
    if (tokens.size() != width) {
      reader.fail("row has " + std::to_string(tokens.size()) + " fields, expected " + std::to_string(width));
    }
    World world;
    world.time = reader.parse_double(tokens[0]);
    world.step_count = static_cast<int>(record.steps.size());
    std::size_t k = 1;
    auto agent = [&](WorldAgentState a) {
      a.position = {reader.parse_double(tokens[k]), reader.parse_double(tokens[k + 1])};
      a.velocity = {reader.parse_double(tokens[k + 2]), reader.parse_double(tokens[k + 3])};
      k += 4;
      return a;
    };
    world.robot = agent(robot);
    for (const auto& h : humans) world.humans.push_back(agent(h));

    const std::string& info_text = tokens[k + 5];
    if (info_text == kEndTag) {
      if (tokens[k] != "-1") reader.fail("final row must carry action -1");
      record.final_world = std::move(world);
      ended = true;
      continue;
    }
    const auto info = parse_step_info(info_text);
    if (!info) reader.fail("unknown step info '" + info_text + "'");
    StepRecord s;
    s.world = std::move(world);
    s.action_index = static_cast<int>(reader.parse_i64(tokens[k]));
    if (s.action_index < -1 || s.action_index >= static_cast<int>(ActionSet::kSize)) {
      reader.fail("action index " + tokens[k] + " out of range");
    }
    s.action = {reader.parse_double(tokens[k + 1]), reader.parse_double(tokens[k + 2])};
    s.reward = reader.parse_double(tokens[k + 3]);
    s.d_min = reader.parse_double(tokens[k + 4]);
    s.info = *info;
    record.steps.push_back(std::move(s));
  }

  const auto checksum = reader.expect_tokens("checksum");
  if (checksum.size() != 2 || checksum[0] != "checksum") reader.fail("expected 'checksum <hex>'");
  const std::string actual = checksum_hex(body);
  if (checksum[1] != actual) reader.fail("checksum mismatch: file says " + checksum[1] + ", rows hash to " + actual);
  if (reader.next_nonempty()) reader.fail("trailing content after checksum");
  return record;
}

void save_trajectory(const std::string& path, const EpisodeRecord& record) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_trajectory(out, record);
}

EpisodeRecord load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_trajectory(in, path);
}

double path_length(const EpisodeRecord& record) {
  double total = 0.0;
  for (std::size_t i = 0; i < record.steps.size(); ++i) {
    const Vec2& next = i + 1 < record.steps.size() ? record.steps[i + 1].world.robot.position
                                                   : record.final_world.robot.position;
    total += distance(record.steps[i].world.robot.position, next);
  }
  return total;
}

}  // namespace crowdnav
