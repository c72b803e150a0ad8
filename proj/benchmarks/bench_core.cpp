#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "edgellm/dpp.hpp"
#include "edgellm/experiment.hpp"
#include "edgellm/metrics.hpp"
#include "edgellm/scenario.hpp"

using namespace edgellm;

static void BM_Jain(benchmark::State& state) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> rho(static_cast<std::size_t>(state.range(0)));
  for (auto& x : rho) x = u(g);
  for (auto _ : state) benchmark::DoNotOptimize(jain(rho));
}
BENCHMARK(BM_Jain)->Arg(4)->Arg(64);

// Full argmax on the busiest node type (4 vGPUs).
static void BM_DppSelect(benchmark::State& state) {
  const SimConfig c = default_scenario_config();
  const NodeIndex n = *c.node_index("vm7");
  NodeSnapshot s;
  s.node = n;
  s.current = DeploymentAction(c.lms.size());
  s.phase.assign(c.lms.size(), std::nullopt);
  s.backlog = {12.0, 3.0, 0.0, 30.0};
  s.queued_requests.assign(c.lms.size(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(dpp_select(c.servers[n], s, s.backlog, c.dpp, c));
}
BENCHMARK(BM_DppSelect);

static void BM_EnumerateActions(benchmark::State& state) {
  const SimConfig c = default_scenario_config();
  const NodeIndex n = *c.node_index("vm7");
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_actions(c.servers[n], c));
}
BENCHMARK(BM_EnumerateActions);

// One simulated slot of the default scenario, per policy.
static void BM_RunSlot(benchmark::State& state) {
  const auto policy = static_cast<PolicyName>(state.range(0));
  const SimConfig c = default_scenario_config();
  Simulation sim(c, make_policy_set(policy, c), nullptr, SimOptions{false});
  for (int i = 0; i < 50; ++i) sim.run_slot();
  for (auto _ : state) benchmark::DoNotOptimize(sim.run_slot());
  state.SetLabel(to_string(policy));
}
BENCHMARK(BM_RunSlot)
    ->Arg(static_cast<int>(PolicyName::kRR))
    ->Arg(static_cast<int>(PolicyName::kRL))
    ->Arg(static_cast<int>(PolicyName::kRF));

static void BM_PlannedEpoch(benchmark::State& state) {
  SimConfig c = default_scenario_config();
  for (auto _ : state) {
    Simulation sim(c, make_policy_set(PolicyName::kMA, c), nullptr, SimOptions{false});
    benchmark::DoNotOptimize(sim.run_epoch());
  }
}
BENCHMARK(BM_PlannedEpoch)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
