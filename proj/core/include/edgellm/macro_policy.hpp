#pragma once

// Macro-policy wire format and validity rules.
//
// Wire format (also the on-disk format):
//   {"routing_probabilities": {"<lm>": {"<node>": p, ...}, ...},
//    "node_role_intent": {"<node>": ["<lm>", ...], ...}}
// LM keys are LM names; node keys are server ids.

#include <optional>
#include <string>
#include <vector>

#include "edgellm/model.hpp"

namespace edgellm {

inline constexpr double kSimplexTolerance = 1e-6;

struct PolicyViolation {
  std::string field;
  std::string message;
};

// Every violation of the three validity conditions: per-LM probability
// vectors over feasible nodes, no mass on infeasible nodes, role sets that are
// jointly deployable at minimum allocations.
std::vector<PolicyViolation> macro_policy_violations(const MacroPolicy& policy, const SimConfig& config);

// True iff some assignment of minimum allocations (smallest CPU / GPU grid
// entries) places every LM of `roles` on `node` within its budgets.
bool roles_deployable(const ServerSpec& node, const std::set<LmIndex>& roles, const SimConfig& config);

struct PolicyParse {
  std::optional<MacroPolicy> policy;
  std::string error;
};

// Strict parse: the whole text must be one JSON object of the wire schema.
PolicyParse parse_macro_policy(const std::string& text, const SimConfig& config);
std::string macro_policy_to_json(const MacroPolicy& policy, const SimConfig& config, int indent = -1);

// Roles: each inference node takes LMs in id order while still deployable.
std::vector<std::set<LmIndex>> greedy_roles(const SimConfig& config);

// Uniform routing over feasible nodes with greedy roles. This is the
// fallback whenever a planner output is rejected.
MacroPolicy random_baseline_policy(const SimConfig& config);

}  // namespace edgellm
