#pragma once

// Domain types shared by every part of the simulator: model types, servers,
// links, requests, deployment actions, macro policies and the scenario config.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace edgellm {

using NodeIndex = std::size_t;
using LmIndex = std::size_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Modality { kTextToText, kTextToImage, kImageToText };

std::string to_string(Modality m);
std::optional<Modality> parse_modality(const std::string& s);

// A model service type. Latency parameters feed the power-law model in
// latency.hpp; memory floors feed the resource constraints.
struct LmTypeSpec {
  int id = 0;
  std::string name;
  Modality modality = Modality::kTextToText;
  double min_ram_gb = 0.0;
  double min_vram_gb = 0.0;
  double deploy_ram_gb = 0.0;
  double storage_gb = 0.0;  // informational, not enforced
  bool cpu_feasible = true;
  double gpu_base_seconds_per_prompt = 1.0;
  double cpu_base_seconds_per_prompt = 1.0;  // kInfinity iff !cpu_feasible
  double gpu_speedup_exponent = 1.0;
  double cpu_speedup_exponent = 1.0;
  double startup_seconds_gpu = 0.0;
  double startup_seconds_cpu = 0.0;
  double termination_seconds = 0.0;
  std::int64_t prompt_bytes = 1;
  std::int64_t result_bytes = 1;

  bool image_modality() const { return modality != Modality::kTextToText; }
};

struct ServerSpec {
  std::string id;
  int cpu_cores = 0;
  double ram_gb = 0.0;
  int vgpu_units = 0;
  double vram_gb = 0.0;
  bool gpu_capable = false;
  // The control node runs the centralized agents only and never hosts LMs
  // or receives user prompts.
  bool hosts_inference = true;
};

struct TopologyLink {
  NodeIndex src = 0;
  NodeIndex dst = 0;
  double bandwidth_bytes_per_s = 1.0;
  double rtt_seconds = 0.0;
};

// Per-LM placement on one node.
struct Placement {
  enum class Mode { kOff, kCpu, kGpu };
  Mode mode = Mode::kOff;
  int units = 0;  // cores for kCpu, vGPUs for kGpu

  static Placement off() { return {}; }
  static Placement cpu(int cores) { return {Mode::kCpu, cores}; }
  static Placement gpu(int vgpus) { return {Mode::kGpu, vgpus}; }

  bool active() const { return mode != Mode::kOff; }
  bool on_gpu() const { return mode == Mode::kGpu; }
  bool on_cpu() const { return mode == Mode::kCpu; }

  friend bool operator==(const Placement&, const Placement&) = default;
  // Off < Cpu(small) < Cpu(large) < Gpu(small) < Gpu(large).
  friend auto operator<=>(const Placement& a, const Placement& b) {
    if (a.mode != b.mode) return static_cast<int>(a.mode) <=> static_cast<int>(b.mode);
    return a.units <=> b.units;
  }
};

std::string to_string(const Placement& p);

// One placement per LM type, indexed by LmIndex.
struct DeploymentAction {
  std::vector<Placement> placements;

  DeploymentAction() = default;
  explicit DeploymentAction(std::size_t lm_count) : placements(lm_count) {}

  std::size_t size() const { return placements.size(); }
  const Placement& operator[](LmIndex i) const { return placements[i]; }
  Placement& operator[](LmIndex i) { return placements[i]; }
  int gpu_instances() const;
  int active_count() const;

  friend bool operator==(const DeploymentAction&, const DeploymentAction&) = default;
  friend auto operator<=>(const DeploymentAction&, const DeploymentAction&) = default;
};

std::string to_string(const DeploymentAction& a);

// Tier-1 output: per-LM routing distribution and per-node role sets.
struct MacroPolicy {
  // routing_probs[lm][node]; rows span every node.
  std::vector<std::vector<double>> routing_probs;
  // node_roles[node] = LM indices the node should specialize in.
  std::vector<std::set<LmIndex>> node_roles;

  friend bool operator==(const MacroPolicy&, const MacroPolicy&) = default;
};

struct LinkDefaults {
  double bandwidth_bytes_per_s = 125e6;  // 1 Gb/s
  double rtt_seconds = 0.002;
  // When false, only explicit links connect distinct nodes.
  bool full_mesh = true;
};

struct WorkloadSpec {
  // presence[node][lm]: probability that a (node, lm) pair draws a request in
  // a slot. Nodes that do not host inference must have zero rows.
  std::vector<std::vector<double>> presence;
  // Weights over k = 0..8; k = 0 means no request.
  std::vector<double> k_weights = std::vector<double>(9, 1.0);
  // drift[epoch][lm] multiplies presence during that epoch; the last row
  // persists for later epochs.
  std::vector<std::vector<double>> drift;
  std::optional<std::string> trace_path;
};

struct DppParams {
  double v = 1.0;
  std::vector<double> alpha_cpu;
  std::vector<double> alpha_gpu;
  double p0 = 0.1;
  double p1 = 0.25;
  double p2 = 0.37;
  double lambda_churn = 0.08;
  double kappa = 0.76;
  double epsilon = 0.1;
  std::vector<int> cpu_grid = {2, 4, 8};
  std::vector<int> gpu_grid = {1, 2};

  friend bool operator==(const DppParams&, const DppParams&) = default;
};

struct AgenticParams {
  double overload_factor = 1.5;
  std::size_t retrieval_k = 4;
  double max_shift_per_epoch = 0.15;
  double planner_timeout_s = 20.0;
};

enum class PolicyName { kMA, kRR, kRL, kMAL, kAL, kRF, kLL };

std::string to_string(PolicyName p);
std::optional<PolicyName> parse_policy_name(const std::string& s);

struct SimConfig {
  std::vector<ServerSpec> servers;
  std::vector<LmTypeSpec> lms;
  std::vector<TopologyLink> links;  // explicit overrides; symmetric
  LinkDefaults default_link;
  double slot_seconds = 30.0;
  int slots_per_epoch = 50;
  double tau_seconds = 900.0;
  double lambda_weight = 0.5;
  WorkloadSpec workload;
  DppParams dpp;
  AgenticParams agentic;
  PolicyName policy = PolicyName::kMA;
  std::uint64_t seed = 1;
  // Optional epoch-1 macro policy; replaces the planner's cold start.
  std::optional<MacroPolicy> initial_policy;

  std::optional<NodeIndex> node_index(const std::string& id) const;
  std::optional<LmIndex> lm_index(int id) const;
  std::optional<LmIndex> lm_index_by_name(const std::string& name) const;
  std::vector<NodeIndex> inference_nodes() const;
};

struct ConfigViolation {
  std::string field;
  std::string message;
};

// Returns an empty list iff every type invariant holds.
std::vector<ConfigViolation> validate_config(const SimConfig& config);

// Nodes where the LM could ever be placed.
std::vector<NodeIndex> feasible_nodes(const LmTypeSpec& lm, const std::vector<ServerSpec>& servers);
bool is_feasible_node(const LmTypeSpec& lm, const ServerSpec& server);

// Resource budget check over the active placements of one node.
bool check_headroom(const ServerSpec& node, const DeploymentAction& action,
                    const std::vector<LmTypeSpec>& lms);

// Placement-level feasibility: mode allowed for the LM and the node.
bool placement_allowed(const LmTypeSpec& lm, const ServerSpec& node, const Placement& p);

struct ResourceUse {
  int vgpus = 0;
  int cores = 0;
  double ram_gb = 0.0;
  double vram_gb = 0.0;

  void add(const LmTypeSpec& lm, const Placement& p);
  bool fits(const ServerSpec& node) const;
};

enum class OutcomeKind { kPending, kSuccess, kFailed };
enum class FailureReason { kNone, kDeadline, kNeverDeployable };

std::string to_string(FailureReason r);

struct Request {
  std::uint64_t request_id = 0;
  LmIndex lm = 0;
  NodeIndex origin = 0;
  int arrival_slot = 0;
  int k_prompts = 1;
  std::optional<NodeIndex> dispatched_to;
  int progress = 0;

  double arrival_time = 0.0;  // slot start
  double uplink_end = 0.0;
  double inference_start = -1.0;
  double inference_end = -1.0;
  double downlink_end = -1.0;
  double infer_seconds = 0.0;  // completed-prompt inference time

  OutcomeKind outcome = OutcomeKind::kPending;
  FailureReason reason = FailureReason::kNone;
  double finalize_time = -1.0;
};

}  // namespace edgellm
