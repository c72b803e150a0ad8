#include "edgellm/baselines.hpp"

#include <algorithm>

#include "edgellm/dpp.hpp"

namespace edgellm {

namespace {

std::vector<std::vector<NodeIndex>> feasible_by_lm(const SimConfig& config) {
  std::vector<std::vector<NodeIndex>> out;
  for (const auto& lm : config.lms) out.push_back(feasible_nodes(lm, config.servers));
  return out;
}

}  // namespace

RoutingMatrix RandomRouter::route(const WorldView& world, Rng& rng) {
  const SimConfig& config = *world.config;
  const auto feasible = feasible_by_lm(config);
  RoutingMatrix m(config.servers.size(), config.lms.size());
  for (NodeIndex o : config.inference_nodes()) {
    for (LmIndex i = 0; i < config.lms.size(); ++i) {
      if (feasible[i].empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, feasible[i].size() - 1);
      m.dest[o][i] = feasible[i][pick(rng)];
    }
  }
  return m;
}

RoutingMatrix AverageRouter::route(const WorldView& world, Rng& /*rng*/) {
  const SimConfig& config = *world.config;
  const auto feasible = feasible_by_lm(config);
  const auto origins = config.inference_nodes();
  RoutingMatrix m(config.servers.size(), config.lms.size());
  for (std::size_t pos = 0; pos < origins.size(); ++pos) {
    for (LmIndex i = 0; i < config.lms.size(); ++i) {
      if (feasible[i].empty()) continue;
      const std::size_t turn = static_cast<std::size_t>(world.slot) * origins.size() + pos + i;
      m.dest[origins[pos]][i] = feasible[i][turn % feasible[i].size()];
    }
  }
  return m;
}

RoutingMatrix LocalRouter::route(const WorldView& world, Rng& /*rng*/) {
  const SimConfig& config = *world.config;
  RoutingMatrix m(config.servers.size(), config.lms.size());
  for (NodeIndex o = 0; o < config.servers.size(); ++o) {
    for (LmIndex i = 0; i < config.lms.size(); ++i) m.dest[o][i] = o;
  }
  return m;
}

DeploymentAction full_activation_action(const ServerSpec& node, const SimConfig& config) {
  DeploymentAction a(config.lms.size());
  if (!node.hosts_inference) return a;
  std::vector<int> cpu = config.dpp.cpu_grid;
  std::vector<int> gpu = config.dpp.gpu_grid;
  std::sort(cpu.rbegin(), cpu.rend());
  std::sort(gpu.rbegin(), gpu.rend());
  // Each LM grabs the biggest slice still free, GPU before CPU; later LMs
  // get what is left.
  for (LmIndex i = 0; i < config.lms.size(); ++i) {
    std::vector<Placement> tries;
    for (int g : gpu) tries.push_back(Placement::gpu(g));
    for (int c : cpu) tries.push_back(Placement::cpu(c));
    for (const auto& p : tries) {
      if (!placement_allowed(config.lms[i], node, p)) continue;
      a[i] = p;
      if (check_headroom(node, a, config.lms)) break;
      a[i] = Placement::off();
    }
  }
  return a;
}

DeploymentAction FullActivationDeployer::decide(const NodeSnapshot& node, const WorldView& world, Rng& /*rng*/) {
  auto it = fixed_.find(node.node);
  if (it == fixed_.end()) {
    it = fixed_.emplace(node.node, full_activation_action(world.config->servers[node.node], *world.config)).first;
  }
  return it->second;
}

DeploymentAction RandomDeployer::decide(const NodeSnapshot& node, const WorldView& world, Rng& rng) {
  const SimConfig& config = *world.config;
  auto it = cache_.find(node.node);
  if (it == cache_.end()) it = cache_.emplace(node.node, enumerate_actions(config.servers[node.node], config)).first;
  const auto actions = filter_transient(it->second, node);
  if (actions.empty()) return node.current;
  std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
  return actions[pick(rng)];
}

DeploymentAction DppDeployer::decide(const NodeSnapshot& node, const WorldView& world, Rng& /*rng*/) {
  const SimConfig& config = *world.config;
  auto it = cache_.find(node.node);
  if (it == cache_.end()) it = cache_.emplace(node.node, enumerate_actions(config.servers[node.node], config)).first;
  const auto& spec = config.servers[node.node];
  if (!node.transient) return dpp_select(spec, node, node.backlog, config.dpp, config, it->second).action;
  return dpp_select(spec, node, node.backlog, config.dpp, config, filter_transient(it->second, node)).action;
}

}  // namespace edgellm
