#pragma once

// Discrete-time simulation engine.
//
// Each slot: route (from the end-of-previous-slot snapshot), dispatch with
// uplink delay, apply per-node deployment actions, then advance every node
// through its event loop until the slot ends. Epochs wrap slots with one
// macro-planning call.
//
// Replica lifecycle: Pending -> Starting -> Running -> Terminating -> gone.
// A Pending replica has been committed but waits for a terminating replica to
// release physical resources; it counts against the committed budget only.
// Starting, Running and Terminating replicas physically hold their resources.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "edgellm/ledger.hpp"
#include "edgellm/metrics.hpp"
#include "edgellm/model.hpp"
#include "edgellm/rng.hpp"
#include "edgellm/workload.hpp"

namespace edgellm {

enum class ReplicaPhase { kPending, kStarting, kRunning, kTerminating };

std::string to_string(ReplicaPhase p);

struct Replica {
  LmIndex lm = 0;
  Placement placement;
  ReplicaPhase phase = ReplicaPhase::kPending;
  double phase_end = 0.0;  // Starting / Terminating only
  // Prompts completed per request served by this replica.
  std::map<std::uint64_t, int> checkpoint;
  // In-service prompt, if any.
  std::optional<std::uint64_t> serving;
  double prompt_start = 0.0;
  double prompt_end = 0.0;
};

enum class EventKind {
  kDispatch,
  kEnqueue,
  kPromptStart,
  kPromptDone,
  kPromptLost,
  kInferenceDone,
  kComplete,
  kFail,
  kReplicaPending,
  kReplicaStarting,
  kReplicaRunning,
  kReplicaTerminating,
  kReplicaGone,
  kActionVoided,
  kActionRejected,
  kPolicyError,
  kRoutingFallback,
  kPlannerFallback,
};

std::string to_string(EventKind k);

struct EventRecord {
  double time = 0.0;
  NodeIndex node = 0;
  EventKind kind = EventKind::kDispatch;
  std::uint64_t request_id = 0;  // 0 when not request-scoped
  std::string detail;
};

// "time node kind request_id detail", one record per line.
std::string format_event(const EventRecord& e, const SimConfig& config);

// Inference accounting for one finalized request.
struct RequestAudit {
  std::uint64_t request_id = 0;
  int k = 0;
  int prompts_completed = 0;
  // Per-prompt completion counts; every entry must be 0 or 1.
  std::vector<int> completions;
  double infer_seconds = 0.0;       // sum over completed prompts
  double required_seconds = 0.0;    // per-prompt time of the mode that completed each prompt
  double wasted_seconds = 0.0;      // partial prompts lost to interruption
  int interruptions = 0;
};

struct NodeSnapshot {
  NodeIndex node = 0;
  std::vector<double> backlog;        // prompts, queued plus inbound, per LM
  std::vector<int> queued_requests;   // per LM
  DeploymentAction current;           // committed placements (Pending/Starting/Running)
  std::vector<std::optional<ReplicaPhase>> phase;  // committed replica phase per LM
  bool transient = false;             // any Pending or Starting replica
  ResourceUse held;
  ResourceUse committed;
  double image_backlog_share = 0.0;

  bool lm_transient(LmIndex lm) const;
};

struct WorldView {
  const SimConfig* config = nullptr;
  int slot = 0;
  double now = 0.0;
  std::vector<NodeSnapshot> nodes;
  const MacroPolicy* macro = nullptr;  // null for planner-less policies
};

// routing[origin][lm]; an empty entry falls back to the origin.
struct RoutingMatrix {
  std::vector<std::vector<std::optional<NodeIndex>>> dest;

  RoutingMatrix() = default;
  RoutingMatrix(std::size_t nodes, std::size_t lms) : dest(nodes, std::vector<std::optional<NodeIndex>>(lms)) {}
};

class Router {
 public:
  virtual ~Router() = default;
  virtual RoutingMatrix route(const WorldView& world, Rng& rng) = 0;
};

class Deployer {
 public:
  virtual ~Deployer() = default;
  virtual DeploymentAction decide(const NodeSnapshot& node, const WorldView& world, Rng& rng) = 0;
};

struct PlanContext {
  const SimConfig* config = nullptr;
  int epoch = 1;
  const EpochTelemetry* last_telemetry = nullptr;  // null at cold start
  const MacroPolicy* previous = nullptr;           // null at cold start
};

class Planner {
 public:
  virtual ~Planner() = default;
  // May throw or return nullopt; the engine then keeps the previous policy.
  virtual std::optional<MacroPolicy> plan(const PlanContext& ctx) = 0;
  virtual void epoch_closed(int /*epoch*/, const EpochTelemetry& /*telemetry*/, const MacroPolicy& /*policy*/) {}
  // Set when the last plan() replaced a rejected answer with a fallback; the
  // engine logs it.
  virtual std::optional<std::string> last_fallback() const { return std::nullopt; }
};

struct PolicySet {
  std::shared_ptr<Router> router;
  std::shared_ptr<Deployer> deployer;
  std::shared_ptr<Planner> planner;  // optional
};

class EngineObserver {
 public:
  virtual ~EngineObserver() = default;
  virtual void on_event(const EventRecord& /*event*/) {}
  virtual void on_finalize(const LedgerRow& /*row*/, const RequestAudit& /*audit*/) {}
};

// Shared sink for node runtimes.
struct EngineRecorder {
  bool keep_events = true;
  std::vector<EventRecord> events;
  std::vector<LedgerRow> ledger;
  std::vector<RequestAudit> audits;
  std::vector<std::int64_t> completions;  // per LM
  std::vector<std::int64_t> failures;     // per LM
  EngineObserver* observer = nullptr;
  // Invoked after every event with the emitting node, for invariant audits.
  std::function<void(NodeIndex)> after_event;

  void emit(EventRecord e);
};

struct DeployResult {
  int started = 0;
  int stopped = 0;
  int voided = 0;
  bool rejected = false;
};

class NodeRuntime {
 public:
  NodeRuntime(const SimConfig& config, NodeIndex node, EngineRecorder& recorder);

  NodeIndex index() const { return node_; }
  const ServerSpec& spec() const;

  // Request leaves its origin now and joins this node's queue at enqueue_time.
  void dispatch(Request request, double enqueue_time);
  // Fails the request at `now` because this node can never host its LM.
  void reject_never_deployable(Request request, double now);

  DeployResult apply_deployment(const DeploymentAction& action, double now);
  // Installs a Running replica without startup delay (initial state).
  void install_running(LmIndex lm, const Placement& placement);

  // Processes all events strictly before `until`.
  void advance(double until);
  // Processes events at exactly `now` (slot-boundary settlement).
  void settle(double now);

  NodeSnapshot snapshot() const;
  DeploymentAction committed_action() const;
  ResourceUse held_use() const;
  ResourceUse committed_use() const;
  double backlog(LmIndex lm) const;
  const std::vector<Replica>& replicas() const { return replicas_; }
  const std::deque<Request>& queue(LmIndex lm) const { return queues_[lm]; }
  // Requests queued, in transit, or in downlink.
  std::size_t in_flight(LmIndex lm) const;
  double now() const { return now_; }

 private:
  struct Transit {
    Request request;
    double enqueue_time;
  };
  struct Downlink {
    Request request;
    double end;
  };

  void run_events(double limit, bool inclusive);
  double next_event_time() const;
  void process_at(double t);
  void emit(double t, EventKind kind, std::uint64_t request_id, std::string detail);
  void finalize(Request& r, double t, bool success, FailureReason reason);
  void interrupt(Replica& rep, double t);
  void promote_pending(double t);
  void start_service(double t);
  Replica* committed_replica(LmIndex lm);
  const Replica* committed_replica(LmIndex lm) const;
  RequestAudit& audit_for(const Request& r);

  const SimConfig* config_;
  NodeIndex node_;
  EngineRecorder* recorder_;
  double now_ = 0.0;
  std::vector<Replica> replicas_;
  std::vector<std::deque<Request>> queues_;
  std::vector<Transit> transit_;
  std::vector<Downlink> downlinks_;
  // (deadline, request id, lm) for queued requests.
  std::set<std::tuple<double, std::uint64_t, LmIndex>> deadlines_;
  std::map<std::uint64_t, RequestAudit> audits_;
};

struct SlotOutcome {
  int slot = 0;
  std::vector<LedgerRow> completed;
  std::vector<LedgerRow> failed;
  std::vector<NodeSnapshot> nodes;  // at slot end
};

struct ConservationCounts {
  std::vector<std::int64_t> arrivals;
  std::vector<std::int64_t> completions;
  std::vector<std::int64_t> failures;
  std::vector<std::int64_t> in_flight;

  bool balanced() const;
};

struct SimOptions {
  bool keep_events = true;
};

class Simulation {
 public:
  Simulation(const SimConfig& config, PolicySet policies, std::unique_ptr<ArrivalSource> arrivals = nullptr,
             SimOptions options = {});
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  SlotOutcome run_slot();
  EpochTelemetry run_epoch();

  const SimConfig& config() const { return config_; }
  int next_slot() const { return slot_; }
  int epochs_run() const { return epoch_; }
  double now() const { return slot_ * config_.slot_seconds; }

  const std::vector<LedgerRow>& ledger() const { return recorder_.ledger; }
  const std::vector<RequestAudit>& audits() const { return recorder_.audits; }
  const std::vector<EventRecord>& events() const { return recorder_.events; }
  const std::vector<RoutingLogEntry>& routing_log() const { return routing_log_; }
  const std::vector<EpochTelemetry>& telemetry() const { return telemetry_; }
  const std::optional<MacroPolicy>& macro_policy() const { return macro_; }
  std::vector<NodeRuntime>& nodes() { return nodes_; }
  const std::vector<NodeRuntime>& nodes() const { return nodes_; }

  ConservationCounts conservation() const;
  WorldView view() const;

  void set_observer(EngineObserver* observer) { recorder_.observer = observer; }
  void set_after_event(std::function<void(NodeIndex)> fn) { recorder_.after_event = std::move(fn); }
  void write_events(std::ostream& out) const;

 private:
  MacroPolicy choose_macro_policy();
  void log(double t, NodeIndex node, EventKind kind, std::uint64_t request_id, std::string detail);

  SimConfig config_;
  PolicySet policies_;
  std::unique_ptr<ArrivalSource> arrivals_;
  EngineRecorder recorder_;
  std::vector<NodeRuntime> nodes_;
  std::vector<RoutingLogEntry> routing_log_;
  std::vector<EpochTelemetry> telemetry_;
  std::optional<MacroPolicy> macro_;
  std::vector<std::int64_t> arrived_;
  int slot_ = 0;
  int epoch_ = 0;
};

}  // namespace edgellm
