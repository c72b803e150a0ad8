#include "edgellm/engine.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "edgellm/latency.hpp"
#include "edgellm/macro_policy.hpp"

namespace edgellm {

std::string to_string(ReplicaPhase p) {
  switch (p) {
    case ReplicaPhase::kPending: return "pending";
    case ReplicaPhase::kStarting: return "starting";
    case ReplicaPhase::kRunning: return "running";
    case ReplicaPhase::kTerminating: return "terminating";
  }
  return "?";
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::kDispatch: return "dispatch";
    case EventKind::kEnqueue: return "enqueue";
    case EventKind::kPromptStart: return "prompt_start";
    case EventKind::kPromptDone: return "prompt_done";
    case EventKind::kPromptLost: return "prompt_lost";
    case EventKind::kInferenceDone: return "inference_done";
    case EventKind::kComplete: return "complete";
    case EventKind::kFail: return "fail";
    case EventKind::kReplicaPending: return "replica_pending";
    case EventKind::kReplicaStarting: return "replica_starting";
    case EventKind::kReplicaRunning: return "replica_running";
    case EventKind::kReplicaTerminating: return "replica_terminating";
    case EventKind::kReplicaGone: return "replica_gone";
    case EventKind::kActionVoided: return "action_voided";
    case EventKind::kActionRejected: return "action_rejected";
    case EventKind::kPolicyError: return "policy_error";
    case EventKind::kRoutingFallback: return "routing_fallback";
    case EventKind::kPlannerFallback: return "planner_fallback";
  }
  return "?";
}

std::string format_event(const EventRecord& e, const SimConfig& config) {
  return fmt::format("{:.6f} {} {} {} {}", e.time, config.servers[e.node].id, to_string(e.kind), e.request_id,
                     e.detail);
}

bool NodeSnapshot::lm_transient(LmIndex lm) const {
  return phase[lm] && (*phase[lm] == ReplicaPhase::kPending || *phase[lm] == ReplicaPhase::kStarting);
}

void EngineRecorder::emit(EventRecord e) {
  if (observer) observer->on_event(e);
  if (keep_events) events.push_back(std::move(e));
}

// ---------------------------------------------------------------------------
// NodeRuntime

NodeRuntime::NodeRuntime(const SimConfig& config, NodeIndex node, EngineRecorder& recorder)
    : config_(&config), node_(node), recorder_(&recorder), queues_(config.lms.size()) {}

const ServerSpec& NodeRuntime::spec() const { return config_->servers[node_]; }

void NodeRuntime::emit(double t, EventKind kind, std::uint64_t request_id, std::string detail) {
  recorder_->emit({t, node_, kind, request_id, std::move(detail)});
  if (recorder_->after_event) recorder_->after_event(node_);
}

RequestAudit& NodeRuntime::audit_for(const Request& r) {
  auto [it, inserted] = audits_.try_emplace(r.request_id);
  if (inserted) {
    it->second.request_id = r.request_id;
    it->second.k = r.k_prompts;
    it->second.completions.assign(static_cast<std::size_t>(std::max(r.k_prompts, 0)), 0);
  }
  return it->second;
}

void NodeRuntime::dispatch(Request request, double enqueue_time) {
  request.dispatched_to = node_;
  request.uplink_end = enqueue_time;
  emit(request.arrival_time, EventKind::kDispatch, request.request_id,
       fmt::format("lm={} origin={} k={}", config_->lms[request.lm].name, config_->servers[request.origin].id,
                   request.k_prompts));
  audit_for(request);
  transit_.push_back({std::move(request), enqueue_time});
}

void NodeRuntime::reject_never_deployable(Request request, double now) {
  request.dispatched_to = node_;
  request.uplink_end = now;
  audit_for(request);
  finalize(request, now, false, FailureReason::kNeverDeployable);
}

void NodeRuntime::finalize(Request& r, double t, bool success, FailureReason reason) {
  r.outcome = success ? OutcomeKind::kSuccess : OutcomeKind::kFailed;
  r.reason = reason;
  r.finalize_time = t;

  LedgerRow row;
  row.request_id = r.request_id;
  row.lm = r.lm;
  row.origin = r.origin;
  row.dest = node_;
  row.k = r.k_prompts;
  row.arrival_slot = r.arrival_slot;
  row.t_q = t - r.arrival_time;
  row.uplink_s = std::min(r.uplink_end, t) - r.arrival_time;
  row.infer_s = r.infer_seconds;
  row.downlink_s = r.inference_end >= 0 ? t - r.inference_end : 0.0;
  // Waiting, startup residue and lost partial prompts.
  row.queue_s = row.t_q - row.uplink_s - row.infer_s - row.downlink_s;
  row.success = success;
  row.reason = reason;
  row.finish_s = t;

  emit(t, success ? EventKind::kComplete : EventKind::kFail, r.request_id,
       success ? fmt::format("T_q={:.6f}", row.t_q) : to_string(reason));

  auto it = audits_.find(r.request_id);
  RequestAudit audit = it != audits_.end() ? std::move(it->second) : RequestAudit{};
  if (it != audits_.end()) audits_.erase(it);
  if (success) {
    ++recorder_->completions[r.lm];
  } else {
    ++recorder_->failures[r.lm];
  }
  if (recorder_->observer) recorder_->observer->on_finalize(row, audit);
  recorder_->ledger.push_back(row);
  recorder_->audits.push_back(std::move(audit));
}

Replica* NodeRuntime::committed_replica(LmIndex lm) {
  for (auto& r : replicas_) {
    if (r.lm == lm && r.phase != ReplicaPhase::kTerminating) return &r;
  }
  return nullptr;
}

const Replica* NodeRuntime::committed_replica(LmIndex lm) const {
  for (const auto& r : replicas_) {
    if (r.lm == lm && r.phase != ReplicaPhase::kTerminating) return &r;
  }
  return nullptr;
}

DeploymentAction NodeRuntime::committed_action() const {
  DeploymentAction a(config_->lms.size());
  for (const auto& r : replicas_) {
    if (r.phase != ReplicaPhase::kTerminating) a[r.lm] = r.placement;
  }
  return a;
}

ResourceUse NodeRuntime::held_use() const {
  ResourceUse u;
  for (const auto& r : replicas_) {
    if (r.phase != ReplicaPhase::kPending) u.add(config_->lms[r.lm], r.placement);
  }
  return u;
}

ResourceUse NodeRuntime::committed_use() const {
  ResourceUse u;
  for (const auto& r : replicas_) {
    if (r.phase != ReplicaPhase::kTerminating) u.add(config_->lms[r.lm], r.placement);
  }
  return u;
}

double NodeRuntime::backlog(LmIndex lm) const {
  double b = 0.0;
  for (const auto& r : queues_[lm]) b += r.k_prompts - r.progress;
  for (const auto& t : transit_) {
    if (t.request.lm == lm) b += t.request.k_prompts;
  }
  return b;
}

std::size_t NodeRuntime::in_flight(LmIndex lm) const {
  std::size_t n = queues_[lm].size();
  for (const auto& t : transit_) n += t.request.lm == lm;
  for (const auto& d : downlinks_) n += d.request.lm == lm;
  return n;
}

NodeSnapshot NodeRuntime::snapshot() const {
  const std::size_t lm_count = config_->lms.size();
  NodeSnapshot s;
  s.node = node_;
  s.backlog.assign(lm_count, 0.0);
  s.queued_requests.assign(lm_count, 0);
  s.phase.assign(lm_count, std::nullopt);
  s.current = committed_action();
  double total = 0.0;
  double image = 0.0;
  for (LmIndex i = 0; i < lm_count; ++i) {
    s.backlog[i] = backlog(i);
    s.queued_requests[i] = static_cast<int>(queues_[i].size());
    total += s.backlog[i];
    if (config_->lms[i].image_modality()) image += s.backlog[i];
  }
  for (const auto& t : transit_) ++s.queued_requests[t.request.lm];
  for (const auto& r : replicas_) {
    if (r.phase == ReplicaPhase::kTerminating) continue;
    s.phase[r.lm] = r.phase;
    if (r.phase == ReplicaPhase::kPending || r.phase == ReplicaPhase::kStarting) s.transient = true;
  }
  s.held = held_use();
  s.committed = committed_use();
  s.image_backlog_share = total > 0 ? image / total : 0.0;
  return s;
}

void NodeRuntime::install_running(LmIndex lm, const Placement& placement) {
  if (committed_replica(lm)) throw std::logic_error("install_running: replica already present");
  if (!placement.active() || !placement_allowed(config_->lms[lm], spec(), placement)) {
    throw std::invalid_argument("install_running: placement not allowed");
  }
  ResourceUse u = held_use();
  u.add(config_->lms[lm], placement);
  if (!u.fits(spec())) throw std::invalid_argument("install_running: exceeds node budget");
  Replica rep;
  rep.lm = lm;
  rep.placement = placement;
  rep.phase = ReplicaPhase::kRunning;
  replicas_.push_back(std::move(rep));
}

void NodeRuntime::interrupt(Replica& rep, double t) {
  if (!rep.serving) return;
  const std::uint64_t id = *rep.serving;
  auto& q = queues_[rep.lm];
  if (!q.empty() && q.front().request_id == id) {
    auto& audit = audit_for(q.front());
    audit.wasted_seconds += t - rep.prompt_start;
    ++audit.interruptions;
    rep.checkpoint[id] = q.front().progress;
  }
  emit(t, EventKind::kPromptLost, id, fmt::format("partial={:.6f}", t - rep.prompt_start));
  rep.serving.reset();
}

DeployResult NodeRuntime::apply_deployment(const DeploymentAction& action, double now) {
  DeployResult res;
  const std::size_t lm_count = config_->lms.size();
  if (action.size() != lm_count) {
    emit(now, EventKind::kActionRejected, 0, "action size mismatch");
    res.rejected = true;
    return res;
  }
  bool transient = false;
  for (const auto& r : replicas_) {
    transient |= r.phase == ReplicaPhase::kPending || r.phase == ReplicaPhase::kStarting;
  }
  const DeploymentAction current = committed_action();
  DeploymentAction effective = current;
  for (LmIndex i = 0; i < lm_count; ++i) {
    if (action[i] == current[i]) continue;
    // While a replica is coming up, anything needing new resources waits.
    if (transient && action[i].active()) {
      emit(now, EventKind::kActionVoided, 0,
           fmt::format("{} {}->{}", config_->lms[i].name, to_string(current[i]), to_string(action[i])));
      ++res.voided;
      continue;
    }
    if (action[i].active() && !placement_allowed(config_->lms[i], spec(), action[i])) {
      emit(now, EventKind::kActionRejected, 0,
           fmt::format("{} {} not allowed", config_->lms[i].name, to_string(action[i])));
      res.rejected = true;
      return res;
    }
    effective[i] = action[i];
  }
  if (effective == current) return res;
  if (!check_headroom(spec(), effective, config_->lms)) {
    emit(now, EventKind::kActionRejected, 0, fmt::format("headroom {}", to_string(effective)));
    res.rejected = true;
    return res;
  }

  // Stops first, so the committed set never overshoots between events.
  for (LmIndex i = 0; i < lm_count; ++i) {
    if (effective[i] == current[i] || !current[i].active()) continue;
    for (auto it = replicas_.begin(); it != replicas_.end(); ++it) {
      if (it->lm != i || it->phase == ReplicaPhase::kTerminating) continue;
      if (it->phase == ReplicaPhase::kPending) {
        emit(now, EventKind::kReplicaGone, 0, fmt::format("{} {} cancelled", config_->lms[i].name,
                                                          to_string(it->placement)));
        replicas_.erase(it);
      } else {
        interrupt(*it, now);
        it->phase = ReplicaPhase::kTerminating;
        it->phase_end = now + termination_delay(config_->lms[i]);
        emit(now, EventKind::kReplicaTerminating, 0,
             fmt::format("{} {}", config_->lms[i].name, to_string(it->placement)));
      }
      ++res.stopped;
      break;
    }
  }
  for (LmIndex i = 0; i < lm_count; ++i) {
    if (effective[i] == current[i] || !effective[i].active()) continue;
    Replica rep;
    rep.lm = i;
    rep.placement = effective[i];
    rep.phase = ReplicaPhase::kPending;
    emit(now, EventKind::kReplicaPending, 0, fmt::format("{} {}", config_->lms[i].name, to_string(rep.placement)));
    replicas_.push_back(std::move(rep));
    ++res.started;
  }
  promote_pending(now);
  return res;
}

void NodeRuntime::promote_pending(double t) {
  ResourceUse held = held_use();
  for (auto& rep : replicas_) {
    if (rep.phase != ReplicaPhase::kPending) continue;
    ResourceUse next = held;
    next.add(config_->lms[rep.lm], rep.placement);
    if (!next.fits(spec())) continue;
    held = next;
    rep.phase = ReplicaPhase::kStarting;
    rep.phase_end = t + startup_delay(config_->lms[rep.lm], rep.placement);
    emit(t, EventKind::kReplicaStarting, 0,
         fmt::format("{} {} until={:.6f}", config_->lms[rep.lm].name, to_string(rep.placement), rep.phase_end));
  }
}

void NodeRuntime::start_service(double t) {
  for (auto& rep : replicas_) {
    if (rep.phase != ReplicaPhase::kRunning || rep.serving) continue;
    auto& q = queues_[rep.lm];
    if (q.empty()) continue;
    Request& r = q.front();
    if (r.inference_start < 0) r.inference_start = t;
    rep.serving = r.request_id;
    rep.prompt_start = t;
    rep.prompt_end = t + per_prompt_seconds(config_->lms[rep.lm], rep.placement);
    emit(t, EventKind::kPromptStart, r.request_id,
         fmt::format("prompt={} {}", r.progress, to_string(rep.placement)));
  }
}

double NodeRuntime::next_event_time() const {
  double t = kInfinity;
  for (const auto& tr : transit_) t = std::min(t, tr.enqueue_time);
  for (const auto& rep : replicas_) {
    if (rep.phase == ReplicaPhase::kStarting || rep.phase == ReplicaPhase::kTerminating) {
      t = std::min(t, rep.phase_end);
    }
    if (rep.serving) t = std::min(t, rep.prompt_end);
  }
  for (const auto& d : downlinks_) t = std::min(t, d.end);
  if (!deadlines_.empty()) t = std::min(t, std::get<0>(*deadlines_.begin()));
  return t;
}

void NodeRuntime::process_at(double t) {
  const double tau = config_->tau_seconds;

  // Terminations release resources first so pending replicas can start.
  bool freed = false;
  for (auto it = replicas_.begin(); it != replicas_.end();) {
    if (it->phase == ReplicaPhase::kTerminating && it->phase_end <= t) {
      emit(t, EventKind::kReplicaGone, 0, fmt::format("{} {}", config_->lms[it->lm].name, to_string(it->placement)));
      it = replicas_.erase(it);
      freed = true;
    } else {
      ++it;
    }
  }
  if (freed) promote_pending(t);

  for (auto& rep : replicas_) {
    if (rep.phase == ReplicaPhase::kStarting && rep.phase_end <= t) {
      rep.phase = ReplicaPhase::kRunning;
      emit(t, EventKind::kReplicaRunning, 0, fmt::format("{} {}", config_->lms[rep.lm].name, to_string(rep.placement)));
    }
  }

  if (!transit_.empty()) {
    std::vector<Transit> remaining;
    for (auto& tr : transit_) {
      if (tr.enqueue_time > t) {
        remaining.push_back(std::move(tr));
        continue;
      }
      Request& r = tr.request;
      const double deadline = r.arrival_time + tau;
      if (t >= deadline) {
        finalize(r, t, false, FailureReason::kDeadline);
        continue;
      }
      emit(t, EventKind::kEnqueue, r.request_id, config_->lms[r.lm].name);
      deadlines_.emplace(deadline, r.request_id, r.lm);
      queues_[r.lm].push_back(std::move(r));
    }
    transit_ = std::move(remaining);
  }

  for (auto& rep : replicas_) {
    if (!rep.serving || rep.prompt_end > t) continue;
    auto& q = queues_[rep.lm];
    Request& r = q.front();
    const double pp = per_prompt_seconds(config_->lms[rep.lm], rep.placement);
    auto& audit = audit_for(r);
    if (r.progress < static_cast<int>(audit.completions.size())) ++audit.completions[r.progress];
    ++audit.prompts_completed;
    audit.infer_seconds += pp;
    audit.required_seconds += pp;
    r.infer_seconds += pp;
    ++r.progress;
    rep.checkpoint[r.request_id] = r.progress;
    rep.serving.reset();
    emit(t, EventKind::kPromptDone, r.request_id, fmt::format("prompt={}", r.progress - 1));
    if (r.progress >= r.k_prompts) {
      r.inference_end = t;
      rep.checkpoint.erase(r.request_id);
      deadlines_.erase({r.arrival_time + tau, r.request_id, r.lm});
      const double dl = transfer_seconds(*config_, node_, r.origin,
                                         static_cast<std::int64_t>(r.k_prompts) * config_->lms[r.lm].result_bytes);
      emit(t, EventKind::kInferenceDone, r.request_id, fmt::format("downlink={:.6f}", dl));
      downlinks_.push_back({std::move(r), t + dl});
      q.pop_front();
    }
  }

  if (!downlinks_.empty()) {
    std::vector<Downlink> remaining;
    for (auto& d : downlinks_) {
      if (d.end > t) {
        remaining.push_back(std::move(d));
        continue;
      }
      const double t_q = d.end - d.request.arrival_time;
      const bool ok = t_q <= tau;
      d.request.downlink_end = d.end;
      finalize(d.request, d.end, ok, ok ? FailureReason::kNone : FailureReason::kDeadline);
    }
    downlinks_ = std::move(remaining);
  }

  while (!deadlines_.empty() && std::get<0>(*deadlines_.begin()) <= t) {
    const auto [deadline, id, lm] = *deadlines_.begin();
    deadlines_.erase(deadlines_.begin());
    auto& q = queues_[lm];
    auto it = std::find_if(q.begin(), q.end(), [id = id](const Request& r) { return r.request_id == id; });
    if (it == q.end()) continue;
    for (auto& rep : replicas_) {
      if (rep.serving == id) {
        interrupt(rep, t);
        rep.checkpoint.erase(id);
      }
    }
    Request r = std::move(*it);
    q.erase(it);
    finalize(r, t, false, FailureReason::kDeadline);
  }

  start_service(t);
}

void NodeRuntime::run_events(double limit, bool inclusive) {
  start_service(now_);
  while (true) {
    const double t = next_event_time();
    if (inclusive ? !(t <= limit) : !(t < limit)) break;
    now_ = std::max(now_, t);
    process_at(now_);
  }
}

void NodeRuntime::advance(double until) {
  run_events(until, false);
  now_ = std::max(now_, until);
}

void NodeRuntime::settle(double now) {
  now_ = std::max(now_, now);
  run_events(now, true);
}

// ---------------------------------------------------------------------------
// Simulation

bool ConservationCounts::balanced() const {
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    if (arrivals[i] != completions[i] + failures[i] + in_flight[i]) return false;
  }
  return true;
}

Simulation::Simulation(const SimConfig& config, PolicySet policies, std::unique_ptr<ArrivalSource> arrivals,
                       SimOptions options)
    : config_(config), policies_(std::move(policies)), arrivals_(std::move(arrivals)) {
  if (!policies_.router || !policies_.deployer) throw std::invalid_argument("Simulation: router and deployer required");
  if (!arrivals_) arrivals_ = make_arrival_source(config_, config_.seed);
  recorder_.keep_events = options.keep_events;
  recorder_.completions.assign(config_.lms.size(), 0);
  recorder_.failures.assign(config_.lms.size(), 0);
  arrived_.assign(config_.lms.size(), 0);
  nodes_.reserve(config_.servers.size());
  for (NodeIndex n = 0; n < config_.servers.size(); ++n) nodes_.emplace_back(config_, n, recorder_);
}

void Simulation::log(double t, NodeIndex node, EventKind kind, std::uint64_t request_id, std::string detail) {
  recorder_.emit({t, node, kind, request_id, std::move(detail)});
}

WorldView Simulation::view() const {
  WorldView w;
  w.config = &config_;
  w.slot = slot_;
  w.now = now();
  w.macro = macro_ ? &*macro_ : nullptr;
  w.nodes.reserve(nodes_.size());
  for (const auto& n : nodes_) w.nodes.push_back(n.snapshot());
  return w;
}

SlotOutcome Simulation::run_slot() {
  const int s = slot_;
  const double t0 = now();
  const std::size_t ledger_before = recorder_.ledger.size();
  const std::size_t node_count = nodes_.size();
  const std::size_t lm_count = config_.lms.size();

  for (auto& n : nodes_) n.settle(t0);

  // Routing is decided on the state as of the end of the previous slot and
  // frozen for the whole slot.
  const WorldView before = view();
  RoutingMatrix routing(node_count, lm_count);
  try {
    Rng rng = make_rng(config_.seed, RngStream::kRouter, static_cast<std::uint64_t>(s));
    routing = policies_.router->route(before, rng);
  } catch (const std::exception& e) {
    log(t0, 0, EventKind::kPolicyError, 0, fmt::format("router: {}", e.what()));
    routing = RoutingMatrix(node_count, lm_count);
  }

  for (Request& r : arrivals_->arrivals(s)) {
    ++arrived_[r.lm];
    std::optional<NodeIndex> dest;
    if (r.origin < routing.dest.size() && r.lm < routing.dest[r.origin].size()) dest = routing.dest[r.origin][r.lm];
    if (!dest || *dest >= node_count) {
      log(t0, r.origin, EventKind::kRoutingFallback, r.request_id, "no routing entry; kept at origin");
      dest = r.origin;
    }
    routing_log_.push_back({s, r.request_id, r.lm, r.origin, *dest, r.k_prompts});
    auto& node = nodes_[*dest];
    if (!is_feasible_node(config_.lms[r.lm], config_.servers[*dest])) {
      node.reject_never_deployable(std::move(r), t0);
      continue;
    }
    double uplink = 0.0;
    try {
      uplink = transfer_seconds(config_, r.origin, *dest,
                                static_cast<std::int64_t>(r.k_prompts) * config_.lms[r.lm].prompt_bytes);
    } catch (const UnreachablePair&) {
      node.reject_never_deployable(std::move(r), t0);
      continue;
    }
    node.dispatch(std::move(r), t0 + uplink);
  }

  const WorldView deploy_view = view();
  for (NodeIndex n = 0; n < node_count; ++n) {
    if (!config_.servers[n].hosts_inference) continue;
    DeploymentAction action;
    try {
      Rng rng = make_rng(config_.seed, RngStream::kDeployer, static_cast<std::uint64_t>(s) * node_count + n);
      action = policies_.deployer->decide(deploy_view.nodes[n], deploy_view, rng);
    } catch (const std::exception& e) {
      log(t0, n, EventKind::kPolicyError, 0, fmt::format("deployer: {}", e.what()));
      continue;
    }
    nodes_[n].apply_deployment(action, t0);
  }

  const double t1 = t0 + config_.slot_seconds;
  for (auto& n : nodes_) n.advance(t1);
  ++slot_;

  SlotOutcome out;
  out.slot = s;
  for (std::size_t i = ledger_before; i < recorder_.ledger.size(); ++i) {
    const auto& row = recorder_.ledger[i];
    (row.success ? out.completed : out.failed).push_back(row);
  }
  out.nodes.reserve(node_count);
  for (const auto& n : nodes_) out.nodes.push_back(n.snapshot());
  return out;
}

MacroPolicy Simulation::choose_macro_policy() {
  const double t0 = now();
  std::optional<MacroPolicy> candidate;
  if (epoch_ == 1 && config_.initial_policy) {
    candidate = config_.initial_policy;
  } else {
    try {
      PlanContext ctx;
      ctx.config = &config_;
      ctx.epoch = epoch_;
      ctx.last_telemetry = telemetry_.empty() ? nullptr : &telemetry_.back();
      ctx.previous = macro_ ? &*macro_ : nullptr;
      candidate = policies_.planner->plan(ctx);
      if (auto reason = policies_.planner->last_fallback()) {
        log(t0, 0, EventKind::kPlannerFallback, 0, fmt::format("planner answer rejected: {}", *reason));
      }
    } catch (const std::exception& e) {
      log(t0, 0, EventKind::kPlannerFallback, 0, fmt::format("planner error: {}", e.what()));
    }
  }
  if (candidate) {
    const auto violations = macro_policy_violations(*candidate, config_);
    if (!violations.empty()) {
      log(t0, 0, EventKind::kPlannerFallback, 0,
          fmt::format("invalid policy: {}: {}", violations.front().field, violations.front().message));
      candidate.reset();
    }
  }
  if (candidate) return *candidate;
  if (macro_) {
    log(t0, 0, EventKind::kPlannerFallback, 0, "keeping previous policy");
    return *macro_;
  }
  log(t0, 0, EventKind::kPlannerFallback, 0, "random baseline policy");
  return random_baseline_policy(config_);
}

EpochTelemetry Simulation::run_epoch() {
  ++epoch_;
  if (policies_.planner) macro_ = choose_macro_policy();
  const std::size_t ledger_start = recorder_.ledger.size();
  const std::size_t routing_start = routing_log_.size();
  for (int i = 0; i < config_.slots_per_epoch; ++i) run_slot();

  TelemetryInputs in;
  in.epoch = epoch_;
  in.finalized = std::span<const LedgerRow>(recorder_.ledger).subspan(ledger_start);
  in.routing_log = std::span<const RoutingLogEntry>(routing_log_).subspan(routing_start);
  in.policy = macro_ ? &*macro_ : nullptr;
  in.lm_count = config_.lms.size();
  in.tau = config_.tau_seconds;
  in.lambda = config_.lambda_weight;
  for (const auto& n : nodes_) {
    std::vector<double> b(config_.lms.size());
    for (LmIndex i = 0; i < b.size(); ++i) b[i] = n.backlog(i);
    in.node_backlog.push_back(std::move(b));
  }
  EpochTelemetry t = build_epoch_telemetry(in);
  if (policies_.planner && macro_) policies_.planner->epoch_closed(epoch_, t, *macro_);
  telemetry_.push_back(t);
  return t;
}

ConservationCounts Simulation::conservation() const {
  ConservationCounts c;
  c.arrivals = arrived_;
  c.completions = recorder_.completions;
  c.failures = recorder_.failures;
  c.in_flight.assign(config_.lms.size(), 0);
  for (const auto& n : nodes_) {
    for (LmIndex i = 0; i < config_.lms.size(); ++i) c.in_flight[i] += static_cast<std::int64_t>(n.in_flight(i));
  }
  return c;
}

void Simulation::write_events(std::ostream& out) const {
  for (const auto& e : recorder_.events) out << format_event(e, config_) << '\n';
}

}  // namespace edgellm
