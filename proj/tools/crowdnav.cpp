// crowdnav: train, evaluate, compare, demo-gen and render from the command line.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "crowdnav/curve_log.hpp"
#include "crowdnav/errors.hpp"
#include "crowdnav/eval.hpp"
#include "crowdnav/render.hpp"
#include "crowdnav/run_config.hpp"
#include "crowdnav/trajectory.hpp"

namespace fs = std::filesystem;
using namespace crowdnav;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfig = 2,
  kIo = 3,
  kContract = 4,
  kScenario = 5,
};

constexpr const char* kOutputEnv = "CROWDNAV_OUTPUT_DIR";
constexpr const char* kResolvedName = "config.resolved.json";
constexpr const char* kFinalWeights = "final.weights";

/// `--a.b=c` and `--a.b c` pairs left over after CLI11 took its own options.
std::vector<Override> parse_overrides(const std::vector<std::string>& extras) {
  std::vector<Override> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw ConfigError(arg, "unexpected argument");
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(arg.substr(2, eq - 2), arg.substr(eq + 1));
    } else if (i + 1 < extras.size() && extras[i + 1].rfind("--", 0) != 0) {
      out.emplace_back(arg.substr(2), extras[i + 1]);
      ++i;
    } else {
      out.emplace_back(arg.substr(2), "true");
    }
  }
  return out;
}

RunConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
  RunConfig config = path.empty() ? run_config_from_overrides(overrides) : load_run_config(path, overrides);
  if (config.output_dir.empty()) {
    const char* env = std::getenv(kOutputEnv);
    config.output_dir = env && *env ? env : "runs";
  }
  return config;
}

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void log_line(const std::string& message) { std::cerr << message << std::endl; }

std::string pad(int value, int width) {
  std::string s = std::to_string(value);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

std::string format_report(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "success %.3f  collision %.3f  timeout %.3f  danger %.3f  time %.2f  reward %.4f  (%d episodes)",
                r.success_rate, r.collision_rate, r.timeout_rate, r.danger_freq, r.mean_nav_time,
                r.mean_discounted_reward, r.episodes);
  return buf;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  bool print_config = false;
};

int cmd_train(const TrainArgs& args, const std::vector<Override>& overrides) {
  const RunConfig config = load_config(args.config, overrides);
  if (args.print_config) {
    config.validate();
    std::cout << dump_run_config(config);
    return kOk;
  }
  const fs::path out = ensure_dir(config.output_dir);
  const fs::path checkpoints = ensure_dir(out / "checkpoints");
  write_text(out / kResolvedName, dump_run_config(config));

  std::vector<std::unique_ptr<CurveLogWriter>> writers;
  const auto start = std::chrono::steady_clock::now();
  auto hooks = [&](int stage) {
    const std::string tag = "stage" + std::to_string(stage);
    writers.push_back(std::make_unique<CurveLogWriter>((out / ("curve_" + tag + ".csv")).string()));
    CurveLogWriter* writer = writers.back().get();
    TrainHooks h;
    h.on_curve_row = [writer](const CurveRow& row) { writer->write(row); };
    h.on_checkpoint = [checkpoints, tag](int episode, const ValueNetwork& net) {
      net.save_file((checkpoints / (tag + "_ep" + pad(episode, 6) + ".weights")).string());
    };
    h.log = [tag, start](const std::string& message) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      char stamp[32];
      std::snprintf(stamp, sizeof(stamp), "[%8.1fs] ", secs);
      log_line(stamp + tag + ": " + message);
    };
    return h;
  };
  log_line("training " + std::string(method_label(config.method)) + " into " + out.string());
  const RunResult result = run_training(config, hooks);
  result.params.save_file((out / kFinalWeights).string());
  for (std::size_t s = 0; s < result.stages.size(); ++s) {
    const auto& stage = result.stages[s];
    std::string line = "stage " + std::to_string(s + 1) + ": " + std::to_string(stage.episodes_run) + " episodes";
    if (!stage.validations.empty()) {
      const auto& v = stage.validations.back();
      char buf[96];
      std::snprintf(buf, sizeof(buf), ", last validation success %.2f collision %.2f", v.success_rate, v.collision_rate);
      line += buf;
    }
    std::cout << line << '\n';
  }
  std::cout << "weights: " << (out / kFinalWeights).string() << '\n';
  return kOk;
}

// ---- evaluate ----------------------------------------------------------------

struct EvalArgs {
  std::string config;
  std::string checkpoint;
  std::string policy = "value";
  int episodes = 0;
  long long seed_base = -1;
  int trajectories = 0;
};

std::string sibling_config(const std::string& checkpoint) {
  const fs::path candidate = fs::path(checkpoint).parent_path() / kResolvedName;
  if (fs::exists(candidate)) return candidate.string();
  const fs::path up = fs::path(checkpoint).parent_path().parent_path() / kResolvedName;
  return fs::exists(up) ? up.string() : std::string{};
}

std::unique_ptr<Policy> make_policy(const std::string& kind, const std::optional<ValueNetwork>& net) {
  if (kind == "orca") return std::make_unique<OrcaPolicy>();
  if (kind == "random") return std::make_unique<RandomPolicy>();
  if (kind == "value") {
    if (!net) throw ConfigError("checkpoint", "the value policy needs --checkpoint");
    return std::make_unique<ValuePolicy>(*net, 0.0);
  }
  throw ConfigError("policy", "expected value, orca or random");
}

int cmd_evaluate(const EvalArgs& args, std::vector<Override> overrides) {
  std::string config_path = args.config;
  if (config_path.empty() && !args.checkpoint.empty()) config_path = sibling_config(args.checkpoint);
  if (args.episodes > 0) overrides.emplace_back("eval.episodes", std::to_string(args.episodes));
  if (args.seed_base >= 0) overrides.emplace_back("eval.seed_base", std::to_string(args.seed_base));
  // With a run's resolved config the report lands next to that run unless --output-dir says otherwise.
  const RunConfig config = load_config(config_path, overrides);

  std::optional<ValueNetwork> net;
  if (!args.checkpoint.empty()) net = ValueNetwork::load_file(args.checkpoint);
  const auto policy = make_policy(args.policy, net);
  const fs::path out = ensure_dir(config.output_dir);

  const EvalReport report = evaluate(*policy, config.env, config.eval.episodes, config.eval.seed_base);
  std::vector<ComparisonRow> rows{{config.train.init_policy == InitPolicy::Demonstration ? "use" : "none",
                                   args.policy == "value" ? std::string(method_label(config.method)) : args.policy,
                                   report, {}}};
  std::ostringstream text, csv;
  write_report_text(text, rows);
  write_report_csv(csv, rows);
  write_text(out / "report.txt", text.str());
  write_text(out / "report.csv", csv.str());
  if (args.trajectories > 0) {
    const fs::path dir = ensure_dir(out / "trajectories");
    for (int i = 0; i < args.trajectories; ++i) {
      const std::uint64_t seed = config.eval.seed_base + static_cast<std::uint64_t>(i);
      const auto captured = capture_trajectory(*policy, config.env, seed);
      save_trajectory((dir / ("eval_" + std::to_string(seed) + ".traj")).string(), captured.record);
      char buf[128];
      std::snprintf(buf, sizeof(buf), "seed %llu: %s, time %.2f s, path %.2f m", static_cast<unsigned long long>(seed),
                    std::string(to_string(captured.summary.outcome)).c_str(), captured.summary.nav_time,
                    captured.summary.path_length);
      log_line(buf);
    }
  }
  std::cout << format_report(report) << '\n';
  return kOk;
}

// ---- compare -----------------------------------------------------------------

struct CompareArgs {
  std::string runs;
  std::vector<std::string> entries;
  int episodes = 500;
  long long seed_base = -1;
};

int cmd_compare(const CompareArgs& args, const std::vector<Override>& overrides) {
  RunConfig base = load_config("", overrides);
  const std::uint64_t seed_base = args.seed_base >= 0 ? static_cast<std::uint64_t>(args.seed_base) : base.eval.seed_base;

  struct Spec {
    std::string demo, method;
    fs::path dir;
  };
  std::vector<Spec> specs;
  if (args.entries.empty()) {
    if (args.runs.empty()) throw ConfigError("runs", "give --runs DIR or at least one --entry");
    for (const char* demo : {"use", "none"}) {
      const std::vector<Method> methods = std::string(demo) == "use"
                                              ? std::vector<Method>{Method::RL, Method::RL_IL, Method::RL_HER}
                                              : std::vector<Method>{Method::RL, Method::RL_RS, Method::RL_HER_CL};
      for (Method m : methods) {
        specs.push_back({demo, std::string(method_label(m)), fs::path(args.runs) / (std::string(demo) + "-" + std::string(to_string(m)))});
      }
    }
  } else {
    for (const auto& entry : args.entries) {
      std::vector<std::string> parts;
      std::stringstream ss(entry);
      std::string part;
      while (std::getline(ss, part, ',')) parts.push_back(part);
      if (parts.size() != 3) throw ConfigError("entry", "expected DEMO,METHOD,RUN_DIR, got '" + entry + "'");
      specs.push_back({parts[0], parts[1], parts[2]});
    }
  }

  std::vector<ComparisonEntry> entries;
  for (const auto& spec : specs) {
    ComparisonEntry e;
    e.demo = spec.demo;
    e.method = spec.method;
    e.env = base.env;
    const fs::path cfg = spec.dir / kResolvedName;
    if (fs::exists(cfg)) e.env = load_run_config(cfg.string()).env;
    e.load = [dir = spec.dir] { return ValueNetwork::load_file((dir / kFinalWeights).string()); };
    entries.push_back(std::move(e));
  }
  const auto rows = compare_methods(entries, args.episodes, seed_base);
  const fs::path out = ensure_dir(base.output_dir);
  std::ostringstream text, csv;
  write_report_text(text, rows);
  write_report_csv(csv, rows);
  write_text(out / "compare.txt", text.str());
  write_text(out / "compare.csv", csv.str());
  std::cout << text.str();
  return kOk;
}

// ---- demo-gen ----------------------------------------------------------------

struct DemoArgs {
  std::string config;
  std::string policy = "orca";
  std::string checkpoint;
  int episodes = 0;
};

int cmd_demo_gen(const DemoArgs& args, const std::vector<Override>& overrides) {
  const RunConfig config = load_config(args.config, overrides);
  const int episodes = args.episodes > 0 ? args.episodes : config.train.init_episodes;
  const fs::path dir = ensure_dir(fs::path(config.output_dir) / "demos");
  const std::uint64_t seed = derive_seed(config.seed, SeedStream::Demonstration);

  std::vector<EpisodeRecord> records;
  if (args.policy == "orca") {
    records = generate_demonstrations(config.env, episodes, seed);
  } else {
    std::optional<ValueNetwork> net;
    if (!args.checkpoint.empty()) net = ValueNetwork::load_file(args.checkpoint);
    const auto policy = make_policy(args.policy, net);
    std::mt19937_64 rng(derive_seed(seed, SeedStream::Policy));
    for (int i = 0; i < episodes; ++i) {
      records.push_back(run_episode(config.env, *policy, derive_seed(seed, SeedStream::Demonstration, static_cast<std::uint64_t>(i)), rng));
    }
  }
  int successes = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    save_trajectory((dir / ("demo_" + pad(static_cast<int>(i), 5) + ".traj")).string(), records[i]);
    successes += records[i].outcome == Outcome::ReachGoal;
  }
  std::cout << records.size() << " episodes written to " << dir.string() << ", " << successes << " reached the goal\n";
  return kOk;
}

// ---- render ------------------------------------------------------------------

struct RenderArgs {
  std::string input;
  std::string output;
  int label_every = 4;
  int window = 100;
};

int cmd_render(const RenderArgs& args) {
  std::ifstream in(args.input);
  if (!in) throw IoError("cannot open " + args.input);
  std::string first;
  std::getline(in, first);
  in.seekg(0);
  std::string svg;
  if (first.rfind("crowdnav-trajectory", 0) == 0) {
    TrajectoryStyle style;
    style.label_every = args.label_every;
    svg = render_trajectory_svg(read_trajectory(in, args.input), style);
  } else if (first == curve_log_header()) {
    CurveStyle style;
    style.window = args.window;
    svg = render_curves_svg(read_curve_log(in, args.input), style);
  } else {
    throw ParseError(args.input, 1, "neither a trajectory file nor a curve log");
  }
  const std::string output = args.output.empty() ? fs::path(args.input).replace_extension(".svg").string() : args.output;
  write_text(output, svg);
  std::cout << output << '\n';
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Crowd navigation with sparse rewards: training, evaluation and plotting"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  app.footer(std::string("Any config field can be overridden as --section.field=value (e.g. --env.n-humans=1).\n") +
             "Outputs go to output_dir, defaulting to $" + kOutputEnv + " or ./runs.\n" +
             "Exit codes: 0 ok, 2 config, 3 I/O or malformed file, 4 contract violation, 5 scenario generation.");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a value network (method from the config)");
  train->add_option("-c,--config", train_args.config, "JSON run config");
  train->add_flag("--print-config", train_args.print_config, "Print the resolved config and exit");
  train->allow_extras();

  EvalArgs eval_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on fixed seeds");
  evaluate_cmd->add_option("--checkpoint", eval_args.checkpoint, "Weight file");
  evaluate_cmd->add_option("-c,--config", eval_args.config, "JSON run config (default: the run's resolved config)");
  evaluate_cmd->add_option("--policy", eval_args.policy, "value, orca or random")->check(CLI::IsMember({"value", "orca", "random"}));
  evaluate_cmd->add_option("--episodes", eval_args.episodes, "Evaluation episodes (default eval.episodes = 500)");
  evaluate_cmd->add_option("--seed-base", eval_args.seed_base, "First evaluation seed");
  evaluate_cmd->add_option("--trajectories", eval_args.trajectories, "Also save the first K episodes as trajectory files");
  evaluate_cmd->allow_extras();

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "Evaluate several trained runs on one seed set");
  compare->add_option("--runs", compare_args.runs, "Directory holding use-RL, use-RL_IL, ..., none-RL_HER_CL runs");
  compare->add_option("--entry", compare_args.entries, "DEMO,METHOD,RUN_DIR (repeatable)");
  compare->add_option("--episodes", compare_args.episodes, "Evaluation episodes per row");
  compare->add_option("--seed-base", compare_args.seed_base, "First evaluation seed");
  compare->allow_extras();

  DemoArgs demo_args;
  auto* demo = app.add_subcommand("demo-gen", "Write demonstration episodes as trajectory files");
  demo->add_option("-c,--config", demo_args.config, "JSON run config");
  demo->add_option("--policy", demo_args.policy, "orca, random or value")->check(CLI::IsMember({"value", "orca", "random"}));
  demo->add_option("--checkpoint", demo_args.checkpoint, "Weight file for --policy value");
  demo->add_option("--episodes", demo_args.episodes, "Episode count (default train.init_episodes)");
  demo->allow_extras();

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "Render a trajectory file or curve log to SVG");
  render->add_option("input", render_args.input, "Trajectory (.traj) or curve log (.csv)")->required();
  render->add_option("-o,--output", render_args.output, "SVG path (default: input with .svg)");
  render->add_option("--label-every", render_args.label_every, "Trajectory: draw agents every K steps");
  render->add_option("--window", render_args.window, "Curves: smoothing window in episodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  if (train->parsed()) return cmd_train(train_args, parse_overrides(train->remaining()));
  if (evaluate_cmd->parsed()) return cmd_evaluate(eval_args, parse_overrides(evaluate_cmd->remaining()));
  if (compare->parsed()) return cmd_compare(compare_args, parse_overrides(compare->remaining()));
  if (demo->parsed()) return cmd_demo_gen(demo_args, parse_overrides(demo->remaining()));
  if (render->parsed()) return cmd_render(render_args);
  return kUnexpected;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ParseError& e) {
    std::cerr << "malformed file: " << e.what() << '\n';
    return kIo;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const ContractError& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return kContract;
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return kScenario;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}
