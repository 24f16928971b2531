#include "crowdnav/run_config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crowdnav/errors.hpp"

namespace crowdnav {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<std::pair<Method, std::pair<std::string_view, std::string_view>>, 5> kMethods{{
    {Method::RL, {"RL", "RL"}},
    {Method::RL_IL, {"RL_IL", "RL+IL"}},
    {Method::RL_HER, {"RL_HER", "RL+HER"}},
    {Method::RL_RS, {"RL_RS", "RL+RS"}},
    {Method::RL_HER_CL, {"RL_HER_CL", "RL+HER+CL"}},
}};

std::string_view reward_name(RewardMode m) { return m == RewardMode::Sparse ? "sparse" : "shaped"; }
std::string_view init_name(InitPolicy p) { return p == InitPolicy::Random ? "random" : "demonstration"; }

bool method_uses_her(Method m) { return m == Method::RL_HER || m == Method::RL_HER_CL; }

// Walks every leaf field of a RunConfig in file order. `f(path, value&)`.
template <class Config, class F>
void visit_fields(Config& c, F&& f) {
  f("method", c.method);
  f("seed", c.seed);
  f("output_dir", c.output_dir);
  auto& e = c.env;
  f("env.n_humans", e.n_humans);
  f("env.circle_radius", e.circle_radius);
  f("env.dt", e.dt);
  f("env.time_limit", e.time_limit);
  f("env.discomfort_dist", e.discomfort_dist);
  f("env.agent_radius", e.agent_radius);
  f("env.v_pref", e.v_pref);
  f("env.reward_mode", e.reward_mode);
  f("env.alpha", e.alpha);
  f("env.position_noise", e.position_noise);
  f("env.gamma", e.gamma);
  f("env.orca.time_horizon", e.orca.time_horizon);
  f("env.orca.neighbor_dist", e.orca.neighbor_dist);
  f("env.orca.max_speed", e.orca.max_speed);
  f("env.orca.safety_margin", e.orca.safety_margin);
  f("env.orca.responsibility", e.orca.responsibility);
  auto& t = c.train;
  f("train.episodes", t.episodes);
  f("train.eps_start", t.eps_start);
  f("train.eps_end", t.eps_end);
  f("train.eps_decay_episodes", t.eps_decay_episodes);
  f("train.lr_rl", t.lr_rl);
  f("train.lr_il", t.lr_il);
  f("train.il_epochs", t.il_epochs);
  f("train.momentum", t.momentum);
  f("train.batch_size", t.batch_size);
  f("train.grad_steps_per_episode", t.grad_steps_per_episode);
  f("train.target_update_interval", t.target_update_interval);
  f("train.buffer_capacity", t.buffer_capacity);
  f("train.init_episodes", t.init_episodes);
  f("train.init_policy", t.init_policy);
  f("train.il_pretrain", t.il_pretrain);
  f("train.her", c.her);
  f("train.validation_interval", t.validation_interval);
  f("train.validation_episodes", t.validation_episodes);
  f("train.checkpoint_interval", t.checkpoint_interval);
  f("train.network.embedding", t.network.embedding);
  f("train.network.attention", t.network.attention);
  f("train.network.feature", t.network.feature);
  f("train.network.value", t.network.value);
  f("curriculum.stage1_humans", c.curriculum.stage1_humans);
  f("curriculum.stage1_episodes", c.curriculum.stage1_episodes);
  f("eval.episodes", c.eval.episodes);
  f("eval.seed_base", c.eval.seed_base);
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  return parts;
}

const std::set<std::string>& known_paths() {
  static const std::set<std::string> paths = [] {
    std::set<std::string> out;
    RunConfig c;
    visit_fields(c, [&](const char* path, auto&) { out.insert(path); });
    return out;
  }();
  return paths;
}

const Json* find(const Json& root, const std::string& path) {
  const Json* node = &root;
  for (const auto& part : split_path(path)) {
    if (!node->is_object()) return nullptr;
    const auto it = node->find(part);
    if (it == node->end()) return nullptr;
    node = &*it;
  }
  return node;
}

void collect_unknown(const Json& node, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (known_paths().count(path)) continue;
    if (it->is_object()) {
      bool is_section = false;
      for (const auto& known : known_paths()) {
        if (known.rfind(path + ".", 0) == 0) is_section = true;
      }
      if (is_section) {
        collect_unknown(*it, path, out);
        continue;
      }
    }
    out.push_back(path);
  }
}

// ---- typed reads -----------------------------------------------------------

void read(const Json& j, const std::string& path, int& out) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) throw ConfigError(path, "out of range");
  out = static_cast<int>(v);
}

void read(const Json& j, const std::string& path, std::uint64_t& out) {
  if (j.is_number_unsigned()) {
    out = j.get<std::uint64_t>();
  } else if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    out = static_cast<std::uint64_t>(j.get<std::int64_t>());
  } else {
    throw ConfigError(path, "expected a non-negative integer");
  }
}

void read(const Json& j, const std::string& path, double& out) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  out = j.get<double>();
}

void read(const Json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  out = j.get<bool>();
}

void read(const Json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  out = j.get<std::string>();
}

void read(const Json& j, const std::string& path, std::vector<int>& out) {
  if (!j.is_array()) throw ConfigError(path, "expected a list of layer widths");
  out.clear();
  for (const auto& item : j) {
    int v = 0;
    read(item, path, v);
    out.push_back(v);
  }
}

void read(const Json& j, const std::string& path, RewardMode& out) {
  std::string text;
  read(j, path, text);
  if (text == "sparse") {
    out = RewardMode::Sparse;
  } else if (text == "shaped") {
    out = RewardMode::Shaped;
  } else {
    throw ConfigError(path, "expected \"sparse\" or \"shaped\", got \"" + text + "\"");
  }
}

void read(const Json& j, const std::string& path, InitPolicy& out) {
  std::string text;
  read(j, path, text);
  if (text == "random") {
    out = InitPolicy::Random;
  } else if (text == "demonstration") {
    out = InitPolicy::Demonstration;
  } else {
    throw ConfigError(path, "expected \"random\" or \"demonstration\", got \"" + text + "\"");
  }
}

void read(const Json& j, const std::string& path, Method& out) {
  std::string text;
  read(j, path, text);
  const auto m = parse_method(text);
  if (!m) throw ConfigError(path, "unknown method \"" + text + "\" (RL, RL_IL, RL_HER, RL_RS, RL_HER_CL)");
  out = *m;
}

// ---- writes ------------------------------------------------------------------

template <class T>
Json to_json(const T& v) {
  return Json(v);
}
Json to_json(const RewardMode& v) { return std::string(reward_name(v)); }
Json to_json(const InitPolicy& v) { return std::string(init_name(v)); }
Json to_json(const Method& v) { return std::string(to_string(v)); }

void set_path(Json& root, const std::string& path, Json value) {
  Json* node = &root;
  const auto parts = split_path(path);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    Json& child = (*node)[parts[i]];
    if (!child.is_object()) child = Json::object();
    node = &child;
  }
  (*node)[parts.back()] = std::move(value);
}

std::string normalise_key(std::string key) {
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  for (char& c : key) {
    if (c == '-') c = '_';
  }
  return key;
}

Json override_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return text;  // bare words such as RL_HER or sparse
  }
}

RunConfig from_json(Json root, const std::string& source, const std::vector<Override>& overrides) {
  if (!root.is_object()) throw ParseError(source, 0, "top level must be an object");
  for (const auto& [raw_key, value] : overrides) {
    const std::string key = normalise_key(raw_key);
    if (!known_paths().count(key)) throw ConfigError(key, "unknown setting");
    set_path(root, key, override_value(value));
  }
  std::vector<std::string> unknown;
  collect_unknown(root, "", unknown);
  if (!unknown.empty()) throw ConfigError(unknown.front(), "unknown setting");

  Method method = Method::RL_HER_CL;
  if (const Json* m = find(root, "method")) read(*m, "method", method);
  RunConfig config = default_run_config(method);
  visit_fields(config, [&](const char* path, auto& field) {
    if (const Json* node = find(root, path)) read(*node, path, field);
  });
  // Humans move at their preferred speed unless the ORCA cap is set explicitly.
  if (!find(root, "env.orca.max_speed")) config.env.orca.max_speed = config.env.v_pref;
  config.validate();
  return config;
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& [m, names] : kMethods) {
    if (m == method) return names.first;
  }
  return "RL";
}

std::string_view method_label(Method method) {
  for (const auto& [m, names] : kMethods) {
    if (m == method) return names.second;
  }
  return "RL";
}

std::optional<Method> parse_method(std::string_view text) {
  for (const auto& [m, names] : kMethods) {
    if (names.first == text || names.second == text) return m;
  }
  return std::nullopt;
}

RunConfig default_run_config(Method method) {
  RunConfig c;
  c.method = method;
  c.env.reward_mode = method == Method::RL_RS ? RewardMode::Shaped : RewardMode::Sparse;
  c.her = method_uses_her(method);
  c.train.il_pretrain = method == Method::RL_IL;
  c.train.init_policy = method == Method::RL_IL ? InitPolicy::Demonstration : InitPolicy::Random;
  return c;
}

void RunConfig::validate() const {
  const bool shaped = method == Method::RL_RS;
  if ((env.reward_mode == RewardMode::Shaped) != shaped) {
    throw ConfigError("env.reward_mode", std::string("method ") + std::string(to_string(method)) + " requires " +
                                             (shaped ? "shaped" : "sparse") + " reward");
  }
  if (her != method_uses_her(method)) {
    throw ConfigError("train.her", std::string("method ") + std::string(to_string(method)) + " requires her = " +
                                       (her ? "false" : "true"));
  }
  if (train.il_pretrain != (method == Method::RL_IL)) {
    throw ConfigError("train.il_pretrain", "imitation pretraining is on exactly for method RL_IL");
  }
  if (method == Method::RL_IL && train.init_policy != InitPolicy::Demonstration) {
    throw ConfigError("train.init_policy", "RL_IL needs demonstration data");
  }
  if ((method == Method::RL_RS || method == Method::RL_HER_CL) && train.init_policy != InitPolicy::Random) {
    throw ConfigError("train.init_policy", std::string(to_string(method)) + " is trained without demonstrations");
  }
  if (curriculum.stage1_humans < 0) throw ConfigError("curriculum.stage1_humans", "must be >= 0");
  if (curriculum.stage1_episodes < 0) throw ConfigError("curriculum.stage1_episodes", "must be >= 0");
  if (eval.episodes <= 0) throw ConfigError("eval.episodes", "must be > 0");
  env.validate();
  train.validate();
}

RunConfig parse_run_config(std::string_view text, const std::string& source, const std::vector<Override>& overrides) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
  return from_json(std::move(root), source, overrides);
}

RunConfig load_run_config(const std::string& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path, overrides);
}

RunConfig run_config_from_overrides(const std::vector<Override>& overrides) {
  return from_json(Json::object(), "<defaults>", overrides);
}

std::string dump_run_config(const RunConfig& config) {
  Json root = Json::object();
  RunConfig copy = config;
  visit_fields(copy, [&](const char* path, auto& field) { set_path(root, path, to_json(field)); });
  return root.dump(2) + "\n";
}

int stage_count(const RunConfig& config) { return config.curriculum_enabled() ? 2 : 1; }

EnvConfig stage_env(const RunConfig& config, int stage) {
  EnvConfig env = config.env;
  if (config.curriculum_enabled() && stage == 1) env.n_humans = config.curriculum.stage1_humans;
  return env;
}

TrainConfig stage_train(const RunConfig& config, int stage) {
  TrainConfig train = config.train;
  if (config.curriculum_enabled() && stage == 1) train.episodes = config.curriculum.stage1_episodes;
  return train;
}

RunResult run_training(const RunConfig& config, const std::function<TrainHooks(int stage)>& hooks) {
  config.validate();
  auto stage_hooks = [&](int stage) { return hooks ? hooks(stage) : TrainHooks{}; };
  RunResult result;
  if (config.curriculum_enabled()) {
    const TrainHooks first = stage_hooks(1);
    const TrainHooks second = stage_hooks(2);
    auto cl = curriculum_train(stage_train(config, 1), stage_env(config, 1), stage_train(config, 2),
                               stage_env(config, 2), config.seed, first, second);
    result.params = std::move(cl.params);
    result.stages.push_back(std::move(cl.stage1));
    result.stages.push_back(std::move(cl.stage2));
  } else {
    auto single = train(config.train, config.env, config.her, config.seed, std::nullopt, stage_hooks(1));
    result.params = single.params;
    result.stages.push_back(std::move(single));
  }
  return result;
}

}  // namespace crowdnav
