#include "edgellm/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "edgellm/baselines.hpp"

namespace edgellm {

namespace {

std::vector<Placement> lm_options(const LmTypeSpec& lm, const ServerSpec& node, const DppParams& params) {
  std::vector<Placement> out{Placement::off()};
  std::vector<int> cpu = params.cpu_grid;
  std::vector<int> gpu = params.gpu_grid;
  std::sort(cpu.begin(), cpu.end());
  std::sort(gpu.begin(), gpu.end());
  for (int c : cpu) {
    if (placement_allowed(lm, node, Placement::cpu(c))) out.push_back(Placement::cpu(c));
  }
  for (int g : gpu) {
    if (placement_allowed(lm, node, Placement::gpu(g))) out.push_back(Placement::gpu(g));
  }
  return out;
}

void enumerate(const std::vector<std::vector<Placement>>& options, const ServerSpec& node, const SimConfig& config,
               DeploymentAction& current, ResourceUse use, std::size_t lm, std::vector<DeploymentAction>& out) {
  if (lm == options.size()) {
    out.push_back(current);
    return;
  }
  for (const auto& p : options[lm]) {
    ResourceUse next = use;
    next.add(config.lms[lm], p);
    // Usage only grows along the recursion, so a prefix that overflows
    // cannot be completed.
    if (!next.fits(node)) continue;
    current[lm] = p;
    enumerate(options, node, config, current, next, lm + 1, out);
  }
  current[lm] = Placement::off();
}

double fraction_free(double used, double capacity) {
  if (capacity <= 0) return 0.0;
  return std::clamp(1.0 - used / capacity, 0.0, 1.0);
}

}  // namespace

std::vector<DeploymentAction> enumerate_actions(const ServerSpec& node, const SimConfig& config) {
  std::vector<std::vector<Placement>> options;
  for (const auto& lm : config.lms) options.push_back(lm_options(lm, node, config.dpp));
  std::vector<DeploymentAction> out;
  DeploymentAction current(config.lms.size());
  enumerate(options, node, config, current, ResourceUse{}, 0, out);
  return out;
}

std::vector<DeploymentAction> filter_transient(const std::vector<DeploymentAction>& all,
                                               const NodeSnapshot& snapshot) {
  if (!snapshot.transient) return all;
  std::vector<DeploymentAction> out;
  bool has_current = false;
  for (const auto& a : all) {
    bool ok = true;
    for (LmIndex i = 0; i < a.size() && ok; ++i) {
      if (a[i] == snapshot.current[i]) continue;
      if (snapshot.lm_transient(i) || a[i].active()) ok = false;
    }
    if (!ok) continue;
    has_current |= a == snapshot.current;
    out.push_back(a);
  }
  if (!has_current) {
    out.push_back(snapshot.current);
    std::sort(out.begin(), out.end());
  }
  return out;
}

std::vector<DeploymentAction> dpp_feasible_actions(const ServerSpec& node, const NodeSnapshot& snapshot,
                                                   const SimConfig& config) {
  return filter_transient(enumerate_actions(node, config), snapshot);
}

double smoothing(double x, double epsilon) { return epsilon + (1.0 - epsilon) * x; }

Residuals residuals_after(const ServerSpec& node, const DeploymentAction& action, const SimConfig& config) {
  ResourceUse use;
  for (LmIndex i = 0; i < action.size(); ++i) use.add(config.lms[i], action[i]);
  Residuals r;
  r.cpu = fraction_free(use.cores, node.cpu_cores);
  r.mem = fraction_free(use.ram_gb, node.ram_gb);
  r.gpu = node.vgpu_units > 0 ? fraction_free(use.vgpus, node.vgpu_units) : 0.0;
  return r;
}

std::vector<double> dpp_service_proxy(const ServerSpec& node, const DeploymentAction& action, const DppParams& params,
                                      const SimConfig& config) {
  const Residuals eta = residuals_after(node, action, config);
  std::vector<double> mu(action.size(), 0.0);
  for (LmIndex i = 0; i < action.size(); ++i) {
    if (action[i].on_cpu()) {
      mu[i] = params.alpha_cpu[i] * smoothing(eta.cpu, params.epsilon) * smoothing(eta.mem, params.epsilon);
    } else if (action[i].on_gpu()) {
      mu[i] = params.alpha_gpu[i] * smoothing(eta.gpu, params.epsilon);
    }
  }
  return mu;
}

double gpu_price(double eta_gpu, double image_share, const DppParams& params) {
  return params.p0 + params.p1 * (1.0 - eta_gpu) + params.p2 * image_share;
}

double dpp_gpu_price(const ServerSpec& node, const NodeSnapshot& snapshot, const DppParams& params) {
  const double eta = node.vgpu_units > 0 ? fraction_free(snapshot.committed.vgpus, node.vgpu_units) : 1.0;
  return gpu_price(eta, snapshot.image_backlog_share, params);
}

double churn_cost(const DeploymentAction& action, const DeploymentAction& prev, const std::vector<double>& queues,
                  const DppParams& params) {
  double sum = 0.0;
  for (LmIndex i = 0; i < action.size(); ++i) {
    // A mode or size change redeploys the replica, so it counts as a toggle.
    const Placement before = i < prev.size() ? prev[i] : Placement{};
    if (action[i] != before) sum += 1.0 + params.kappa * (i < queues.size() ? queues[i] : 0.0);
  }
  return params.lambda_churn * sum;
}

double dpp_cost(double price, const DeploymentAction& action, const DeploymentAction& prev,
                const std::vector<double>& queues, const DppParams& params) {
  return price * action.gpu_instances() + churn_cost(action, prev, queues, params);
}

DppScore dpp_score(const ServerSpec& node, const DeploymentAction& action, const DeploymentAction& prev,
                   const std::vector<double>& queues, double price, const DppParams& params, const SimConfig& config) {
  DppScore s;
  s.action = action;
  const auto mu = dpp_service_proxy(node, action, params, config);
  for (LmIndex i = 0; i < mu.size(); ++i) s.service += (i < queues.size() ? queues[i] : 0.0) * mu[i];
  s.price = price;
  s.churn = churn_cost(action, prev, queues, params);
  s.cost = price * action.gpu_instances() + s.churn;
  s.score = s.service - params.v * s.cost;
  return s;
}

bool dpp_prefers(const DppScore& a, const DppScore& b) {
  if (a.score > b.score + kDppTieTolerance) return true;
  if (b.score > a.score + kDppTieTolerance) return false;
  const int ga = a.action.gpu_instances();
  const int gb = b.action.gpu_instances();
  if (ga != gb) return ga < gb;
  if (std::abs(a.churn - b.churn) > kDppTieTolerance) return a.churn < b.churn;
  return a.action < b.action;
}

DppScore dpp_select(const ServerSpec& node, const NodeSnapshot& snapshot, const std::vector<double>& queues,
                    const DppParams& params, const SimConfig& config,
                    const std::vector<DeploymentAction>& candidates) {
  const double price = dpp_gpu_price(node, snapshot, params);
  if (candidates.empty()) return dpp_score(node, snapshot.current, snapshot.current, queues, price, params, config);
  DppScore best = dpp_score(node, candidates.front(), snapshot.current, queues, price, params, config);
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    DppScore s = dpp_score(node, candidates[k], snapshot.current, queues, price, params, config);
    if (dpp_prefers(s, best)) best = std::move(s);
  }
  return best;
}

DppScore dpp_select(const ServerSpec& node, const NodeSnapshot& snapshot, const std::vector<double>& queues,
                    const DppParams& params, const SimConfig& config) {
  return dpp_select(node, snapshot, queues, params, config, dpp_feasible_actions(node, snapshot, config));
}

CalibrationStep run_calibration_episode(const SimConfig& config, const DppParams& params, int slots,
                                        std::uint64_t seed) {
  SimConfig cfg = config;
  cfg.dpp = params;
  cfg.seed = seed;
  PolicySet policies{std::make_shared<RandomRouter>(), std::make_shared<DppDeployer>(), nullptr};
  Simulation sim(cfg, std::move(policies), nullptr, SimOptions{false});

  std::vector<DeploymentAction> prev;
  for (const auto& n : sim.nodes()) prev.push_back(n.committed_action());
  long flips = 0;
  long node_slots = 0;
  double headroom_sum = 0.0;
  long headroom_count = 0;
  for (int s = 0; s < slots; ++s) {
    const SlotOutcome out = sim.run_slot();
    for (const auto& snap : out.nodes) {
      const auto& spec = cfg.servers[snap.node];
      if (!spec.hosts_inference) continue;
      ++node_slots;
      for (LmIndex i = 0; i < snap.current.size(); ++i) {
        flips += snap.current[i] != prev[snap.node][i];
      }
      prev[snap.node] = snap.current;
      if (spec.vgpu_units > 0) {
        headroom_sum += fraction_free(snap.held.vgpus, spec.vgpu_units);
        ++headroom_count;
      }
    }
  }
  CalibrationStep step;
  step.params = params;
  double latency = 0.0;
  int successes = 0;
  for (const auto& row : sim.ledger()) {
    if (!row.success) continue;
    latency += row.t_q;
    ++successes;
  }
  step.mean_latency_s = successes > 0 ? latency / successes : cfg.tau_seconds;
  step.gpu_headroom = headroom_count > 0 ? headroom_sum / headroom_count : 0.0;
  step.flip_rate = node_slots > 0 ? static_cast<double>(flips) / node_slots : 0.0;
  return step;
}

CalibrationResult calibrate_dpp(const SimConfig& config, const CalibrationOptions& options) {
  CalibrationResult result;
  result.params = config.dpp;
  std::optional<double> last_latency;
  for (int it = 0; it < options.iterations; ++it) {
    CalibrationStep step = run_calibration_episode(config, result.params, options.slots_per_episode,
                                                   options.seed + static_cast<std::uint64_t>(it));
    step.iteration = it;
    result.trajectory.push_back(step);
    DppParams next = result.params;
    if (last_latency && step.mean_latency_s > *last_latency && step.gpu_headroom > options.headroom_threshold) {
      next.p1 += options.step;
      next.p2 += options.step;
    }
    if (step.flip_rate > options.flip_threshold) {
      next.lambda_churn += options.step;
      next.kappa += options.step;
    }
    last_latency = step.mean_latency_s;
    result.params = next;
  }
  return result;
}

void write_calibration_csv(std::ostream& out, const std::vector<CalibrationStep>& trajectory) {
  out << "iteration,p1,p2,lambda_churn,kappa,mean_latency_s,gpu_headroom,flip_rate\n";
  for (const auto& s : trajectory) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.iteration, s.params.p1,
                       s.params.p2, s.params.lambda_churn, s.params.kappa, s.mean_latency_s, s.gpu_headroom,
                       s.flip_rate);
  }
}

}  // namespace edgellm
