#pragma once

// Two-tier agentic control: an epoch-level macro planner with episodic
// memory, a per-slot prompt scheduler and per-node deployment agents.
//
// Every planner decision goes render -> complete -> parse -> validate. The
// scripted backend computes its answer from structured context and emits the
// same JSON an external backend would, so both share one validation path.

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgellm/engine.hpp"
#include "edgellm/macro_policy.hpp"
#include "edgellm/metrics.hpp"
#include "edgellm/model.hpp"

namespace edgellm {

struct HistoryCase {
  int epoch = 0;
  EpochTelemetry telemetry;
  MacroPolicy policy;
  double f_norm = 0.0;
  double t_norm = 1.0;

  double objective(double lambda) const { return composite_objective(t_norm, f_norm, lambda); }
};

class EpisodicMemory {
 public:
  void append(HistoryCase c) { cases_.push_back(std::move(c)); }
  const std::vector<HistoryCase>& cases() const { return cases_; }
  std::size_t size() const { return cases_.size(); }
  bool empty() const { return cases_.empty(); }

 private:
  std::vector<HistoryCase> cases_;
};

void record_case(EpisodicMemory& memory, int epoch, const EpochTelemetry& telemetry, const MacroPolicy& policy);

// Up to k cases: best objective, worst objective, then nearest neighbours by
// Euclidean distance of arrival-share vectors. Ties go to the later case.
std::vector<HistoryCase> retrieve_cases(const EpisodicMemory& memory, const std::vector<double>& current_mix,
                                        std::size_t k, double lambda = 0.5);

// Plain-text rendering of one epoch; latencies to one decimal, ratios to two.
std::string summarize_epoch(const EpochTelemetry& telemetry, const MacroPolicy* policy, const SimConfig& config);

struct ValidatedPolicy {
  MacroPolicy policy;
  bool fallback = false;
  std::string reason;  // parse error or first violation when fallback
};

ValidatedPolicy validate_macro_policy(const MacroPolicy& candidate, const SimConfig& config);
ValidatedPolicy validate_macro_policy_text(const std::string& text, const SimConfig& config);

// ---------------------------------------------------------------------------
// Planner backends

struct PlannerRequest {
  const SimConfig* config = nullptr;
  int epoch = 1;
  const EpochTelemetry* telemetry = nullptr;
  const MacroPolicy* previous = nullptr;
  std::vector<HistoryCase> retrieved;
  std::string prompt;
};

class PlannerBackend {
 public:
  virtual ~PlannerBackend() = default;
  // Returns the raw completion text; may throw on transport failure.
  virtual std::string complete(const PlannerRequest& request) = 0;
  virtual std::string name() const = 0;
};

class ScriptedPlannerBackend : public PlannerBackend {
 public:
  std::string complete(const PlannerRequest& request) override;
  std::string name() const override { return "scripted"; }
};

// The planner prompt: objective, static context, baseline reference, model
// characteristics, retrieved cases and the latest epoch summary.
std::string render_planner_prompt(const PlannerRequest& request);

// Deterministic per-node placement implied by a role set: GPU-hungry roles
// split the vGPUs first, remaining roles share leftover vGPUs or the cores.
DeploymentAction role_action(const ServerSpec& node, const std::set<LmIndex>& roles, const SimConfig& config);

// Whether an LM is steered to GPUs first: image modality or CPU-infeasible.
bool gpu_hungry(const LmTypeSpec& lm);

// Prompts per second of each LM at each node when every node runs
// role_action for its roles; rate[lm][node].
std::vector<std::vector<double>> role_capacity(const std::vector<std::set<LmIndex>>& roles, const SimConfig& config);

// Role assignment given per-LM demand (prompts per second).
std::vector<std::set<LmIndex>> pack_roles(const SimConfig& config, const std::vector<double>& demand);

// The scripted planner itself.
MacroPolicy scripted_macro_policy(const PlannerRequest& request);

struct PlanResult {
  MacroPolicy policy;
  bool fallback = false;
  std::string reason;
  std::string prompt;
  std::string response;
};

PlanResult plan_macro(PlannerBackend& backend, const EpisodicMemory& memory, const PlanContext& ctx);

// ---------------------------------------------------------------------------
// Tier 2

RoutingMatrix schedule_prompts(const MacroPolicy& macro, const WorldView& world, Rng& rng);

DeploymentAction deploy_control(const NodeSnapshot& node, const std::set<LmIndex>& roles, const SimConfig& config);

struct DeployRequest {
  const SimConfig* config = nullptr;
  const NodeSnapshot* node = nullptr;
  const std::set<LmIndex>* roles = nullptr;
  std::string prompt;
};

class DeployBackend {
 public:
  virtual ~DeployBackend() = default;
  virtual std::string complete(const DeployRequest& request) = 0;
};

std::string render_deploy_prompt(const DeployRequest& request);
// {"placements": {"<lm>": "off" | "cpu:<cores>" | "gpu:<vgpus>"}}; nullopt
// unless the text is exactly that object naming every LM.
std::optional<DeploymentAction> parse_deployment_action(const std::string& text, const SimConfig& config);

// ---------------------------------------------------------------------------
// Engine adapters

class AgenticPlanner : public Planner {
 public:
  explicit AgenticPlanner(std::shared_ptr<PlannerBackend> backend);

  std::optional<MacroPolicy> plan(const PlanContext& ctx) override;
  void epoch_closed(int epoch, const EpochTelemetry& telemetry, const MacroPolicy& policy) override;
  std::optional<std::string> last_fallback() const override;

  const EpisodicMemory& memory() const { return memory_; }
  const std::vector<PlanResult>& history() const { return history_; }
  int fallbacks() const;

 private:
  std::shared_ptr<PlannerBackend> backend_;
  EpisodicMemory memory_;
  std::vector<PlanResult> history_;
};

class AgenticRouter : public Router {
 public:
  RoutingMatrix route(const WorldView& world, Rng& rng) override;
};

class AgenticDeployer : public Deployer {
 public:
  explicit AgenticDeployer(std::shared_ptr<DeployBackend> backend = nullptr) : backend_(std::move(backend)) {}
  DeploymentAction decide(const NodeSnapshot& node, const WorldView& world, Rng& rng) override;

 private:
  std::shared_ptr<DeployBackend> backend_;
};

}  // namespace edgellm
