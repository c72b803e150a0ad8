#pragma once

// Comparison routers and deployers. Composite policies pair one of each:
// RR random+random, RL random+dpp, AL average+dpp, LL local+dpp,
// RF random+full activation, MAL agentic routing+dpp.

#include <map>
#include <vector>

#include "edgellm/engine.hpp"

namespace edgellm {

// Uniform over the LM's feasible nodes, one draw per (origin, lm).
class RandomRouter : public Router {
 public:
  RoutingMatrix route(const WorldView& world, Rng& rng) override;
};

// Deterministic rotation over feasible nodes: every pair cycles through the
// feasible set, offset by origin, so each node receives an equal share.
class AverageRouter : public Router {
 public:
  RoutingMatrix route(const WorldView& world, Rng& rng) override;
};

// Identity: every request stays on its arrival node.
class LocalRouter : public Router {
 public:
  RoutingMatrix route(const WorldView& world, Rng& rng) override;
};

// Greedy activation in LM-id order: the largest GPU allocation that fits,
// else the largest CPU allocation. Fixed for the whole run.
DeploymentAction full_activation_action(const ServerSpec& node, const SimConfig& config);

class FullActivationDeployer : public Deployer {
 public:
  DeploymentAction decide(const NodeSnapshot& node, const WorldView& world, Rng& rng) override;

 private:
  std::map<NodeIndex, DeploymentAction> fixed_;
};

// Uniform over dpp_feasible_actions.
class RandomDeployer : public Deployer {
 public:
  DeploymentAction decide(const NodeSnapshot& node, const WorldView& world, Rng& rng) override;

 private:
  std::map<NodeIndex, std::vector<DeploymentAction>> cache_;
};

class DppDeployer : public Deployer {
 public:
  DeploymentAction decide(const NodeSnapshot& node, const WorldView& world, Rng& rng) override;

 private:
  std::map<NodeIndex, std::vector<DeploymentAction>> cache_;
};

}  // namespace edgellm
