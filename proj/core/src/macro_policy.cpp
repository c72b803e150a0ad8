#include "edgellm/macro_policy.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

namespace edgellm {

using nlohmann::json;

bool roles_deployable(const ServerSpec& node, const std::set<LmIndex>& roles, const SimConfig& config) {
  if (roles.empty()) return true;
  if (!node.hosts_inference) return false;
  const int min_cpu = *std::min_element(config.dpp.cpu_grid.begin(), config.dpp.cpu_grid.end());
  const int min_gpu = *std::min_element(config.dpp.gpu_grid.begin(), config.dpp.gpu_grid.end());
  const std::vector<LmIndex> members(roles.begin(), roles.end());
  for (LmIndex i : members) {
    if (i >= config.lms.size()) return false;
  }
  // 2^|roles| CPU/GPU choices; role sets are small.
  const std::size_t combos = std::size_t{1} << members.size();
  for (std::size_t mask = 0; mask < combos; ++mask) {
    ResourceUse use;
    bool ok = true;
    for (std::size_t b = 0; b < members.size() && ok; ++b) {
      const auto& lm = config.lms[members[b]];
      const Placement p = (mask >> b) & 1U ? Placement::gpu(min_gpu) : Placement::cpu(min_cpu);
      if (!placement_allowed(lm, node, p)) ok = false;
      use.add(lm, p);
    }
    if (ok && use.fits(node)) return true;
  }
  return false;
}

std::vector<PolicyViolation> macro_policy_violations(const MacroPolicy& policy, const SimConfig& config) {
  std::vector<PolicyViolation> out;
  const std::size_t nodes = config.servers.size();
  if (policy.routing_probs.size() != config.lms.size()) {
    out.push_back({"routing_probabilities", "needs one row per LM type"});
    return out;
  }
  for (LmIndex i = 0; i < config.lms.size(); ++i) {
    const auto& row = policy.routing_probs[i];
    const std::string f = "routing_probabilities." + config.lms[i].name;
    if (row.size() != nodes) {
      out.push_back({f, "row must span every node"});
      continue;
    }
    double sum = 0;
    bool negative = false;
    bool infeasible_mass = false;
    for (NodeIndex n = 0; n < nodes; ++n) {
      if (!std::isfinite(row[n]) || row[n] < 0) negative = true;
      if (row[n] != 0 && !is_feasible_node(config.lms[i], config.servers[n])) infeasible_mass = true;
      sum += row[n];
    }
    if (negative) out.push_back({f, "negative or non-finite probability"});
    if (infeasible_mass) out.push_back({f, "mass on a node that can never host this LM"});
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      out.push_back({f, fmt::format("probabilities sum to {:.6f}, not 1", sum)});
    }
  }
  if (policy.node_roles.size() != nodes) {
    out.push_back({"node_role_intent", "needs one role set per node"});
    return out;
  }
  for (NodeIndex n = 0; n < nodes; ++n) {
    const auto& roles = policy.node_roles[n];
    const std::string f = "node_role_intent." + config.servers[n].id;
    bool known = true;
    for (LmIndex i : roles) {
      if (i >= config.lms.size()) {
        out.push_back({f, "unknown LM"});
        known = false;
      } else if (!is_feasible_node(config.lms[i], config.servers[n])) {
        out.push_back({f, config.lms[i].name + " cannot run on this node"});
        known = false;
      }
    }
    if (known && !roles_deployable(config.servers[n], roles, config)) {
      out.push_back({f, "role set exceeds concurrent capacity"});
    }
  }
  return out;
}

namespace {

std::optional<LmIndex> resolve_lm(const std::string& key, const SimConfig& config) {
  if (auto i = config.lm_index_by_name(key)) return i;
  try {
    std::size_t used = 0;
    const int id = std::stoi(key, &used);
    if (used == key.size()) return config.lm_index(id);
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace

PolicyParse parse_macro_policy(const std::string& text, const SimConfig& config) {
  PolicyParse result;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    result.error = std::string("unparseable policy: ") + e.what();
    return result;
  }
  if (!doc.is_object() || !doc.contains("routing_probabilities") || !doc.contains("node_role_intent")) {
    result.error = "policy must be an object with routing_probabilities and node_role_intent";
    return result;
  }
  const auto& routing = doc["routing_probabilities"];
  const auto& roles = doc["node_role_intent"];
  if (!routing.is_object() || !roles.is_object()) {
    result.error = "routing_probabilities and node_role_intent must be objects";
    return result;
  }
  MacroPolicy policy;
  const std::size_t nodes = config.servers.size();
  policy.routing_probs.assign(config.lms.size(), std::vector<double>(nodes, 0.0));
  policy.node_roles.assign(nodes, {});
  std::vector<bool> seen(config.lms.size(), false);
  for (const auto& [lm_key, row] : routing.items()) {
    auto lm = resolve_lm(lm_key, config);
    if (!lm) {
      result.error = "unknown LM in routing_probabilities: " + lm_key;
      return result;
    }
    if (!row.is_object()) {
      result.error = "routing row for " + lm_key + " is not an object";
      return result;
    }
    seen[*lm] = true;
    for (const auto& [node_key, p] : row.items()) {
      auto n = config.node_index(node_key);
      if (!n) {
        result.error = "unknown node in routing_probabilities." + lm_key + ": " + node_key;
        return result;
      }
      if (!p.is_number()) {
        result.error = "non-numeric probability at " + lm_key + "." + node_key;
        return result;
      }
      policy.routing_probs[*lm][*n] = p.get<double>();
    }
  }
  for (LmIndex i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      result.error = "missing routing row for " + config.lms[i].name;
      return result;
    }
  }
  for (const auto& [node_key, list] : roles.items()) {
    auto n = config.node_index(node_key);
    if (!n) {
      result.error = "unknown node in node_role_intent: " + node_key;
      return result;
    }
    if (!list.is_array()) {
      result.error = "role list for " + node_key + " is not an array";
      return result;
    }
    for (const auto& entry : list) {
      std::optional<LmIndex> lm;
      if (entry.is_string()) {
        lm = resolve_lm(entry.get<std::string>(), config);
      } else if (entry.is_number_integer()) {
        lm = config.lm_index(entry.get<int>());
      }
      if (!lm) {
        result.error = "unknown LM in node_role_intent." + node_key;
        return result;
      }
      policy.node_roles[*n].insert(*lm);
    }
  }
  result.policy = std::move(policy);
  return result;
}

std::string macro_policy_to_json(const MacroPolicy& policy, const SimConfig& config, int indent) {
  // ordered_json keeps node and LM order stable for byte-identical output.
  nlohmann::ordered_json routing = nlohmann::ordered_json::object();
  for (LmIndex i = 0; i < policy.routing_probs.size() && i < config.lms.size(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (NodeIndex n = 0; n < policy.routing_probs[i].size() && n < config.servers.size(); ++n) {
      if (policy.routing_probs[i][n] != 0) row[config.servers[n].id] = policy.routing_probs[i][n];
    }
    routing[config.lms[i].name] = row;
  }
  nlohmann::ordered_json roles = nlohmann::ordered_json::object();
  for (NodeIndex n = 0; n < policy.node_roles.size() && n < config.servers.size(); ++n) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (LmIndex i : policy.node_roles[n]) {
      if (i < config.lms.size()) list.push_back(config.lms[i].name);
    }
    roles[config.servers[n].id] = list;
  }
  nlohmann::ordered_json doc;
  doc["routing_probabilities"] = routing;
  doc["node_role_intent"] = roles;
  return doc.dump(indent);
}

std::vector<std::set<LmIndex>> greedy_roles(const SimConfig& config) {
  std::vector<std::set<LmIndex>> roles(config.servers.size());
  for (NodeIndex n = 0; n < config.servers.size(); ++n) {
    for (LmIndex i = 0; i < config.lms.size(); ++i) {
      if (!is_feasible_node(config.lms[i], config.servers[n])) continue;
      auto trial = roles[n];
      trial.insert(i);
      if (roles_deployable(config.servers[n], trial, config)) roles[n] = std::move(trial);
    }
  }
  return roles;
}

MacroPolicy random_baseline_policy(const SimConfig& config) {
  MacroPolicy policy;
  policy.routing_probs.assign(config.lms.size(), std::vector<double>(config.servers.size(), 0.0));
  for (LmIndex i = 0; i < config.lms.size(); ++i) {
    const auto nodes = feasible_nodes(config.lms[i], config.servers);
    for (NodeIndex n : nodes) policy.routing_probs[i][n] = 1.0 / static_cast<double>(nodes.size());
  }
  policy.node_roles = greedy_roles(config);
  return policy;
}

}  // namespace edgellm
