#include <benchmark/benchmark.h>

#include <random>

#include "crowdnav/env.hpp"
#include "crowdnav/policy.hpp"
#include "crowdnav/trainer.hpp"
#include "crowdnav/value_network.hpp"

namespace {

using namespace crowdnav;

World crowd(int humans, std::uint64_t seed) {
  EnvConfig env;
  env.n_humans = humans;
  return reset(env, seed);
}

void BM_Forward(benchmark::State& state) {
  const ValueNetwork net(NetworkShape{}, 1);
  const JointState joint = crowd(static_cast<int>(state.range(0)), 3).joint();
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(joint));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(5)->Arg(10);

void BM_BatchBackward(benchmark::State& state) {
  const ValueNetwork net(NetworkShape{}, 1);
  std::vector<JointState> joints;
  for (int i = 0; i < 100; ++i) joints.push_back(crowd(static_cast<int>(state.range(0)), static_cast<std::uint64_t>(i)).joint());
  const auto batch = PackedBatch::pack(std::span<const JointState>(joints));
  const Eigen::VectorXd targets = Eigen::VectorXd::Constant(100, 0.5);
  auto grads = net.make_gradient_buffer();
  for (auto _ : state) benchmark::DoNotOptimize(net.backward(batch, targets, grads));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_BatchBackward)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_StepHumans(benchmark::State& state) {
  EnvConfig env;
  const World world = crowd(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(step_humans(world.humans, env.orca, env.dt));
}
BENCHMARK(BM_StepHumans)->Arg(5)->Arg(10);

void BM_EnvStep(benchmark::State& state) {
  EnvConfig env;
  const World world = reset(env, 5);
  const ActionSet actions;
  for (auto _ : state) benchmark::DoNotOptimize(step(world, actions[3], env));
}
BENCHMARK(BM_EnvStep);

void BM_GreedyAction(benchmark::State& state) {
  EnvConfig env;
  env.n_humans = static_cast<int>(state.range(0));
  const ValueNetwork net(NetworkShape{}, 1);
  const World world = reset(env, 5);
  const ActionSet actions;
  const double g = discount_factor(env.gamma, env.dt, env.v_pref);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_action(world, net, actions, env, g));
}
BENCHMARK(BM_GreedyAction)->Arg(1)->Arg(5);

void BM_TdUpdate(benchmark::State& state) {
  EnvConfig env;
  env.n_humans = 5;
  TrainConfig cfg;
  cfg.grad_steps_per_episode = 1;
  ValueNetwork net(cfg.network, 1);
  const ValueNetwork target = net;
  SgdMomentum opt(cfg.lr_rl, cfg.momentum);
  ReplayBuffer buffer(2000);
  std::mt19937_64 rng(0);
  for (std::uint64_t s = 0; buffer.size() < 1000; ++s) store_episode(buffer, run_episode(env, RandomPolicy(), s, rng), env, false);
  const double g = discount_factor(env.gamma, env.dt, env.v_pref);
  for (auto _ : state) benchmark::DoNotOptimize(td_update(net, target, opt, buffer, cfg, g, rng));
}
BENCHMARK(BM_TdUpdate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
