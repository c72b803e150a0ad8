#include "edgellm/agentic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "edgellm/latency.hpp"

namespace edgellm {

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<int> sorted_grid(std::vector<int> grid) {
  std::sort(grid.begin(), grid.end());
  return grid;
}

// Largest grid value not above `limit`, or the smallest one when none is.
int fit_grid(const std::vector<int>& sorted, int limit) {
  int best = sorted.front();
  for (int g : sorted) {
    if (g <= limit) best = g;
  }
  return best;
}

// CPU seconds per prompt at the base allocation; infinite when CPU-infeasible.
double hunger(const LmTypeSpec& lm) { return lm.cpu_feasible ? lm.cpu_base_seconds_per_prompt : kInfinity; }

std::string join_roles(const std::set<LmIndex>& roles, const SimConfig& config) {
  std::string out;
  for (LmIndex i : roles) {
    if (!out.empty()) out += ", ";
    out += config.lms[i].name;
  }
  return out.empty() ? "none" : out;
}

std::string fmt_latency(const std::optional<double>& v) { return v ? fmt::format("{:.1f} s", *v) : "n/a"; }

}  // namespace

// ---------------------------------------------------------------------------
// Memory

void record_case(EpisodicMemory& memory, int epoch, const EpochTelemetry& telemetry, const MacroPolicy& policy) {
  HistoryCase c;
  c.epoch = epoch;
  c.telemetry = telemetry;
  c.policy = policy;
  c.f_norm = telemetry.f_norm;
  c.t_norm = telemetry.t_norm;
  memory.append(std::move(c));
}

std::vector<HistoryCase> retrieve_cases(const EpisodicMemory& memory, const std::vector<double>& current_mix,
                                        std::size_t k, double lambda) {
  const auto& cases = memory.cases();
  std::vector<HistoryCase> out;
  if (cases.empty() || k == 0) return out;
  std::vector<bool> taken(cases.size(), false);
  auto take = [&](std::size_t idx) {
    if (taken[idx] || out.size() >= k) return;
    taken[idx] = true;
    out.push_back(cases[idx]);
  };
  // Later cases win ties throughout.
  std::size_t best = 0;
  std::size_t worst = 0;
  for (std::size_t i = 1; i < cases.size(); ++i) {
    if (cases[i].objective(lambda) <= cases[best].objective(lambda)) best = i;
    if (cases[i].objective(lambda) >= cases[worst].objective(lambda)) worst = i;
  }
  take(best);
  take(worst);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (taken[i]) continue;
    const auto mix = cases[i].telemetry.arrival_share();
    double d = 0.0;
    for (std::size_t j = 0; j < std::max(mix.size(), current_mix.size()); ++j) {
      const double a = j < mix.size() ? mix[j] : 0.0;
      const double b = j < current_mix.size() ? current_mix[j] : 0.0;
      d += (a - b) * (a - b);
    }
    dist.emplace_back(std::sqrt(d), i);
  }
  std::sort(dist.begin(), dist.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;
  });
  for (const auto& [d, i] : dist) take(i);
  return out;
}

std::string summarize_epoch(const EpochTelemetry& t, const MacroPolicy* policy, const SimConfig& config) {
  std::string s = fmt::format("Epoch {}: ", t.epoch);
  if (t.no_data) {
    s += "no requests completed or failed in this window, so latency and fairness carry their worst-case "
         "defaults.";
  } else {
    std::string lat;
    std::string rho;
    for (LmIndex i = 0; i < t.per_lm.size(); ++i) {
      if (i > 0) {
        lat += ", ";
        rho += ", ";
      }
      lat += fmt::format("{} {}", config.lms[i].name, fmt_latency(t.per_lm[i].mean_latency_s));
      rho += t.per_lm[i].success_ratio ? fmt::format("{:.2f}", *t.per_lm[i].success_ratio) : "n/a";
    }
    s += fmt::format("mean latency of successful requests per model {}; success ratios {}. ", lat, rho);
    s += fmt::format("Global mean latency {}. Normalized Jain fairness {:.2f}.",
                     fmt_latency(t.global_mean_latency_s), t.f_norm);
  }
  s += fmt::format(" Off-role ratio {:.2f} ({} of {} routed requests).", t.off_role_ratio, t.routed_off_role,
                   t.routed);
  if (policy) {
    s += " Previous allocation:";
    for (NodeIndex n = 0; n < config.servers.size(); ++n) {
      if (!config.servers[n].hosts_inference) continue;
      s += fmt::format(" {} [{}]", config.servers[n].id, join_roles(policy->node_roles[n], config));
    }
    s += ".";
  }
  return s;
}

ValidatedPolicy validate_macro_policy(const MacroPolicy& candidate, const SimConfig& config) {
  ValidatedPolicy out;
  const auto violations = macro_policy_violations(candidate, config);
  if (violations.empty()) {
    out.policy = candidate;
    return out;
  }
  out.fallback = true;
  out.reason = violations.front().field + ": " + violations.front().message;
  out.policy = random_baseline_policy(config);
  return out;
}

ValidatedPolicy validate_macro_policy_text(const std::string& text, const SimConfig& config) {
  const PolicyParse parsed = parse_macro_policy(text, config);
  if (!parsed.policy) {
    ValidatedPolicy out;
    out.fallback = true;
    out.reason = parsed.error;
    out.policy = random_baseline_policy(config);
    return out;
  }
  return validate_macro_policy(*parsed.policy, config);
}

// ---------------------------------------------------------------------------
// Role geometry

bool gpu_hungry(const LmTypeSpec& lm) { return !lm.cpu_feasible || lm.image_modality(); }

DeploymentAction role_action(const ServerSpec& node, const std::set<LmIndex>& roles, const SimConfig& config) {
  DeploymentAction a(config.lms.size());
  if (!node.hosts_inference || roles.empty()) return a;
  const auto gpu_grid = sorted_grid(config.dpp.gpu_grid);
  const auto cpu_grid = sorted_grid(config.dpp.cpu_grid);

  std::vector<LmIndex> hungry;
  std::vector<LmIndex> others;
  for (LmIndex i : roles) {
    if (i >= config.lms.size() || !is_feasible_node(config.lms[i], node)) continue;
    (gpu_hungry(config.lms[i]) ? hungry : others).push_back(i);
  }
  std::stable_sort(hungry.begin(), hungry.end(),
                   [&](LmIndex x, LmIndex y) { return hunger(config.lms[x]) > hunger(config.lms[y]); });

  int units = node.gpu_capable ? node.vgpu_units : 0;
  std::vector<LmIndex> on_cpu;
  std::vector<LmIndex> order;  // placement order, degraded from the back
  const int gmin = gpu_grid.front();
  const std::size_t gpu_count = std::min<std::size_t>(hungry.size(), static_cast<std::size_t>(units / gmin));
  const int share = gpu_count > 0 ? fit_grid(gpu_grid, units / static_cast<int>(gpu_count)) : 0;
  for (std::size_t k = 0; k < hungry.size(); ++k) {
    const LmIndex h = hungry[k];
    if (k < gpu_count) {
      a[h] = Placement::gpu(share);
      units -= share;
      order.push_back(h);
    } else if (config.lms[h].cpu_feasible) {
      on_cpu.push_back(h);
    }
  }
  for (LmIndex o : others) {
    if (units >= gmin && placement_allowed(config.lms[o], node, Placement::gpu(gmin))) {
      a[o] = Placement::gpu(gmin);
      units -= gmin;
      order.push_back(o);
    } else if (config.lms[o].cpu_feasible) {
      on_cpu.push_back(o);
    }
  }
  if (!on_cpu.empty()) {
    const int per = fit_grid(cpu_grid, node.cpu_cores / static_cast<int>(on_cpu.size()));
    for (LmIndex c : on_cpu) {
      a[c] = Placement::cpu(per);
      order.push_back(c);
    }
  }

  // Shrink from the most recently placed LM until the node budget holds.
  while (!check_headroom(node, a, config.lms)) {
    bool changed = false;
    for (auto it = order.rbegin(); it != order.rend() && !changed; ++it) {
      Placement& p = a[*it];
      if (!p.active()) continue;
      const auto& grid = p.on_gpu() ? gpu_grid : cpu_grid;
      auto pos = std::find(grid.begin(), grid.end(), p.units);
      if (pos != grid.end() && pos != grid.begin()) {
        p.units = *(pos - 1);
      } else {
        p = Placement::off();
      }
      changed = true;
    }
    if (!changed) break;
  }
  return a;
}

std::vector<std::vector<double>> role_capacity(const std::vector<std::set<LmIndex>>& roles, const SimConfig& config) {
  std::vector<std::vector<double>> rate(config.lms.size(), std::vector<double>(config.servers.size(), 0.0));
  for (NodeIndex n = 0; n < config.servers.size() && n < roles.size(); ++n) {
    const auto a = role_action(config.servers[n], roles[n], config);
    for (LmIndex i = 0; i < a.size(); ++i) {
      if (a[i].active()) rate[i][n] = 1.0 / per_prompt_seconds(config.lms[i], a[i]);
    }
  }
  return rate;
}

namespace {

struct PackScore {
  double floor = 0.0;  // worst capacity-to-demand ratio, capped
  double total = 0.0;  // demand-weighted capped ratios

  bool better_than(const PackScore& o) const {
    constexpr double kTol = 1e-9;
    if (floor > o.floor + kTol) return true;
    if (floor < o.floor - kTol) return false;
    return total > o.total + kTol;
  }
};

PackScore pack_score(const std::vector<std::set<LmIndex>>& roles, const SimConfig& config,
                     const std::vector<double>& demand) {
  const auto rate = role_capacity(roles, config);
  const double demand_total = std::accumulate(demand.begin(), demand.end(), 0.0);
  PackScore s;
  s.floor = kInfinity;
  for (LmIndex i = 0; i < config.lms.size(); ++i) {
    if (demand[i] <= 0) continue;
    const double cap = std::accumulate(rate[i].begin(), rate[i].end(), 0.0);
    const double ratio = cap / demand[i];
    s.floor = std::min(s.floor, std::min(ratio, 1.25));
    s.total += demand[i] / demand_total * std::min(ratio, 4.0);
  }
  if (std::isinf(s.floor)) s.floor = 0.0;
  return s;
}

}  // namespace

std::vector<std::set<LmIndex>> pack_roles(const SimConfig& config, const std::vector<double>& demand) {
  const std::size_t node_count = config.servers.size();
  std::vector<std::set<LmIndex>> base(node_count);
  std::vector<LmIndex> hungry;
  for (LmIndex i = 0; i < config.lms.size(); ++i) {
    if (gpu_hungry(config.lms[i])) hungry.push_back(i);
  }
  std::stable_sort(hungry.begin(), hungry.end(),
                   [&](LmIndex x, LmIndex y) { return hunger(config.lms[x]) > hunger(config.lms[y]); });

  // Text types go wherever they fit; the packing decides the hungry ones.
  for (NodeIndex n = 0; n < node_count; ++n) {
    if (!config.servers[n].hosts_inference) continue;
    for (LmIndex i = 0; i < config.lms.size(); ++i) {
      if (gpu_hungry(config.lms[i]) || !is_feasible_node(config.lms[i], config.servers[n])) continue;
      auto trial = base[n];
      trial.insert(i);
      if (roles_deployable(config.servers[n], trial, config)) base[n] = std::move(trial);
    }
  }

  // Candidate hungry subsets per node, largest first.
  std::vector<std::vector<std::set<LmIndex>>> options(node_count);
  for (NodeIndex n = 0; n < node_count; ++n) {
    if (!config.servers[n].hosts_inference) {
      options[n].push_back(base[n]);
      continue;
    }
    const std::size_t combos = std::size_t{1} << hungry.size();
    std::vector<std::pair<int, std::set<LmIndex>>> ranked;
    for (std::size_t mask = 0; mask < combos; ++mask) {
      std::set<LmIndex> roles = base[n];
      bool ok = true;
      for (std::size_t b = 0; b < hungry.size() && ok; ++b) {
        if (!((mask >> b) & 1U)) continue;
        if (!is_feasible_node(config.lms[hungry[b]], config.servers[n])) ok = false;
        roles.insert(hungry[b]);
      }
      if (!ok || !roles_deployable(config.servers[n], roles, config)) continue;
      ranked.emplace_back(-std::popcount(mask), std::move(roles));
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& r : ranked) options[n].push_back(std::move(r.second));
    if (options[n].empty()) options[n].push_back(base[n]);
  }

  std::vector<std::set<LmIndex>> roles(node_count);
  for (NodeIndex n = 0; n < node_count; ++n) roles[n] = options[n].front();
  PackScore current = pack_score(roles, config, demand);
  // Coordinate descent over nodes; a handful of passes settles it.
  for (int pass = 0; pass < 8; ++pass) {
    bool improved = false;
    for (NodeIndex n = 0; n < node_count; ++n) {
      for (const auto& opt : options[n]) {
        if (opt == roles[n]) continue;
        auto trial = roles;
        trial[n] = opt;
        const PackScore s = pack_score(trial, config, demand);
        if (s.better_than(current)) {
          roles = std::move(trial);
          current = s;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  return roles;
}

// ---------------------------------------------------------------------------
// Planner

std::string render_planner_prompt(const PlannerRequest& req) {
  const SimConfig& config = *req.config;
  std::ostringstream p;
  p << "You plan request routing and model placement for a cluster of edge servers.\n";
  p << fmt::format(
      "Goal: minimize {:.2f} * normalized latency + {:.2f} * (1 - normalized Jain fairness of per-model success "
      "ratios). A request succeeds when it returns within {:.0f} s.\n\n",
      config.lambda_weight, 1.0 - config.lambda_weight, config.tau_seconds);
  p << "Servers:\n";
  for (const auto& s : config.servers) {
    p << fmt::format("- {}: {} cores, {:.1f} GB RAM, {} vGPU units, {:.1f} GB vRAM{}\n", s.id, s.cpu_cores, s.ram_gb,
                     s.vgpu_units, s.vram_gb, s.hosts_inference ? "" : " (control node, hosts no models)");
  }
  p << "\nModels:\n";
  for (const auto& lm : config.lms) {
    p << fmt::format("- {} ({}): GPU {:.1f} s/prompt, CPU {}, deploy RAM {:.1f} GB, vRAM {:.1f} GB\n", lm.name,
                     to_string(lm.modality), lm.gpu_base_seconds_per_prompt,
                     lm.cpu_feasible ? fmt::format("{:.1f} s/prompt", lm.cpu_base_seconds_per_prompt)
                                     : std::string("not supported"),
                     lm.deploy_ram_gb, lm.min_vram_gb);
  }
  p << "\nReference: the fallback policy spreads each model uniformly over every server able to host it.\n";
  if (req.telemetry) {
    p << "\nLatest epoch:\n" << summarize_epoch(*req.telemetry, req.previous, config) << "\n";
  } else {
    p << "\nNo telemetry yet; this is the first epoch.\n";
  }
  if (!req.retrieved.empty()) {
    p << "\nPast cases:\n";
    for (const auto& c : req.retrieved) {
      p << fmt::format("- objective {:.3f}: ", c.objective(config.lambda_weight))
        << summarize_epoch(c.telemetry, &c.policy, config) << "\n  policy: " << macro_policy_to_json(c.policy, config)
        << "\n";
    }
  }
  p << "\nAnswer with exactly one JSON object with keys \"routing_probabilities\" (model -> server -> "
       "probability, each row summing to 1 over servers able to host the model) and \"node_role_intent\" "
       "(server -> list of models it should specialize in). No other text.\n";
  return p.str();
}

MacroPolicy scripted_macro_policy(const PlannerRequest& req) {
  const SimConfig& config = *req.config;
  const std::size_t lm_count = config.lms.size();
  const std::size_t node_count = config.servers.size();
  const EpochTelemetry* t = req.telemetry;

  std::vector<double> demand(lm_count, 1.0);
  if (t && t->routed > 0) {
    const double window = config.slots_per_epoch * config.slot_seconds;
    for (LmIndex i = 0; i < lm_count; ++i) demand[i] = std::max(t->per_lm[i].routed_prompts, 1) / window;
  }

  MacroPolicy out;
  out.node_roles = pack_roles(config, demand);
  const MacroPolicy uniform = random_baseline_policy(config);
  if (!req.previous) {
    out.routing_probs = uniform.routing_probs;
    return out;
  }

  // Start from the previous policy, or from the best remembered one when the
  // last epoch fell clearly behind it.
  const MacroPolicy* start = req.previous;
  if (t && !t->no_data) {
    double best = t->objective - 0.05;
    for (const auto& c : req.retrieved) {
      const double obj = c.objective(config.lambda_weight);
      if (obj < best) {
        best = obj;
        start = &c.policy;
      }
    }
  }

  const auto rate = role_capacity(out.node_roles, config);
  out.routing_probs.assign(lm_count, std::vector<double>(node_count, 0.0));
  for (LmIndex i = 0; i < lm_count; ++i) {
    std::vector<double> target(node_count, 0.0);
    double mean_backlog = 0.0;
    int hosts = 0;
    for (NodeIndex n = 0; n < node_count; ++n) {
      if (rate[i][n] <= 0) continue;
      if (t && n < t->node_backlog.size()) mean_backlog += t->node_backlog[n][i];
      ++hosts;
    }
    mean_backlog = hosts > 0 ? mean_backlog / hosts : 0.0;
    double sum = 0.0;
    for (NodeIndex n = 0; n < node_count; ++n) {
      if (rate[i][n] <= 0) continue;
      const double b = t && n < t->node_backlog.size() ? t->node_backlog[n][i] : 0.0;
      target[n] = rate[i][n] / (1.0 + b / std::max(1.0, mean_backlog));
      sum += target[n];
    }
    if (sum <= 0) {
      target = uniform.routing_probs[i];
    } else {
      for (double& x : target) x /= sum;
    }

    const auto& prev = start->routing_probs[i];
    const double rho = t && t->per_lm[i].success_ratio ? *t->per_lm[i].success_ratio : 1.0;
    const double step = config.agentic.max_shift_per_epoch * std::min(1.0, 0.5 + 2.0 * (1.0 - rho));
    double tv = 0.0;
    for (NodeIndex n = 0; n < node_count; ++n) tv += 0.5 * std::abs(target[n] - prev[n]);
    const double alpha = tv > step ? step / tv : 1.0;
    auto& row = out.routing_probs[i];
    double row_sum = 0.0;
    for (NodeIndex n = 0; n < node_count; ++n) {
      row[n] = prev[n] + alpha * (target[n] - prev[n]);
      if (row[n] < 1e-12 || !is_feasible_node(config.lms[i], config.servers[n])) row[n] = 0.0;
      row_sum += row[n];
    }
    if (row_sum <= 0) {
      row = uniform.routing_probs[i];
    } else {
      for (double& x : row) x /= row_sum;
    }
  }
  return out;
}

std::string ScriptedPlannerBackend::complete(const PlannerRequest& request) {
  return macro_policy_to_json(scripted_macro_policy(request), *request.config);
}

PlanResult plan_macro(PlannerBackend& backend, const EpisodicMemory& memory, const PlanContext& ctx) {
  const SimConfig& config = *ctx.config;
  PlannerRequest req;
  req.config = ctx.config;
  req.epoch = ctx.epoch;
  req.telemetry = ctx.last_telemetry;
  req.previous = ctx.previous;
  const std::vector<double> mix =
      ctx.last_telemetry ? ctx.last_telemetry->arrival_share() : std::vector<double>(config.lms.size(), 0.0);
  req.retrieved = retrieve_cases(memory, mix, config.agentic.retrieval_k, config.lambda_weight);
  req.prompt = render_planner_prompt(req);

  PlanResult result;
  result.prompt = req.prompt;
  try {
    result.response = backend.complete(req);
  } catch (const std::exception& e) {
    result.fallback = true;
    result.reason = std::string("backend failure: ") + e.what();
    result.policy = random_baseline_policy(config);
    return result;
  }
  ValidatedPolicy v = validate_macro_policy_text(result.response, config);
  result.policy = std::move(v.policy);
  result.fallback = v.fallback;
  result.reason = std::move(v.reason);
  return result;
}

// ---------------------------------------------------------------------------
// Tier 2

RoutingMatrix schedule_prompts(const MacroPolicy& macro, const WorldView& world, Rng& rng) {
  const SimConfig& config = *world.config;
  const std::size_t node_count = config.servers.size();
  RoutingMatrix m(node_count, config.lms.size());
  for (NodeIndex origin : config.inference_nodes()) {
    for (LmIndex i = 0; i < config.lms.size(); ++i) {
      const auto& row = macro.routing_probs[i];
      const double u = uniform01(rng);
      double acc = 0.0;
      std::optional<NodeIndex> dest;
      std::optional<NodeIndex> last;
      for (NodeIndex n = 0; n < node_count; ++n) {
        if (row[n] <= 0) continue;
        last = n;
        acc += row[n];
        if (u < acc) {
          dest = n;
          break;
        }
      }
      if (!dest) dest = last;
      if (!dest) continue;

      // Overload reroute within nodes whose role intent includes this LM.
      std::vector<NodeIndex> consistent;
      for (NodeIndex n = 0; n < node_count; ++n) {
        if (macro.node_roles[n].contains(i) && is_feasible_node(config.lms[i], config.servers[n])) {
          consistent.push_back(n);
        }
      }
      if (!consistent.empty() && *dest < world.nodes.size()) {
        double mean_b = 0.0;
        for (NodeIndex n : consistent) mean_b += world.nodes[n].backlog[i];
        mean_b /= static_cast<double>(consistent.size());
        if (mean_b > 0 && world.nodes[*dest].backlog[i] > config.agentic.overload_factor * mean_b) {
          NodeIndex best = consistent.front();
          for (NodeIndex n : consistent) {
            if (world.nodes[n].backlog[i] < world.nodes[best].backlog[i]) best = n;
          }
          dest = best;
        }
      }
      m.dest[origin][i] = dest;
    }
  }
  return m;
}

DeploymentAction deploy_control(const NodeSnapshot& node, const std::set<LmIndex>& roles, const SimConfig& config) {
  const ServerSpec& spec = config.servers[node.node];
  DeploymentAction a = role_action(spec, roles, config);
  const auto cpu_grid = sorted_grid(config.dpp.cpu_grid);
  const auto gpu_grid = sorted_grid(config.dpp.gpu_grid);

  // Non-role LMs with queued work stay up (or come up) when they block no role.
  std::vector<LmIndex> extras;
  for (LmIndex i = 0; i < config.lms.size(); ++i) {
    if (!roles.contains(i) && node.backlog[i] > 0 && is_feasible_node(config.lms[i], spec)) extras.push_back(i);
  }
  std::stable_sort(extras.begin(), extras.end(),
                   [&](LmIndex x, LmIndex y) { return node.backlog[x] > node.backlog[y]; });
  for (LmIndex i : extras) {
    std::vector<Placement> tries;
    if (node.current[i].active()) tries.push_back(node.current[i]);
    tries.push_back(Placement::cpu(cpu_grid.front()));
    tries.push_back(Placement::gpu(gpu_grid.front()));
    for (const auto& p : tries) {
      if (!placement_allowed(config.lms[i], spec, p)) continue;
      DeploymentAction trial = a;
      trial[i] = p;
      if (check_headroom(spec, trial, config.lms)) {
        a = std::move(trial);
        break;
      }
    }
  }
  return a;
}

std::string render_deploy_prompt(const DeployRequest& req) {
  const SimConfig& config = *req.config;
  const NodeSnapshot& node = *req.node;
  const ServerSpec& spec = config.servers[node.node];
  std::ostringstream p;
  p << fmt::format("You control model replicas on server {} ({} cores, {:.1f} GB RAM, {} vGPU units, {:.1f} GB vRAM).\n",
                   spec.id, spec.cpu_cores, spec.ram_gb, spec.vgpu_units, spec.vram_gb);
  p << "Role intent: " << join_roles(*req.roles, config) << "\n";
  for (LmIndex i = 0; i < config.lms.size(); ++i) {
    p << fmt::format("- {}: backlog {:.0f} prompts, current {}\n", config.lms[i].name, node.backlog[i],
                     to_string(node.current[i]));
  }
  p << "Answer with exactly one JSON object {\"placements\": {\"<model>\": \"off\" | \"cpu:<cores>\" | "
       "\"gpu:<vgpus>\"}} naming every model.\n";
  return p.str();
}

std::optional<DeploymentAction> parse_deployment_action(const std::string& text, const SimConfig& config) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (!doc.is_object() || !doc.contains("placements") || !doc["placements"].is_object()) return std::nullopt;
  DeploymentAction a(config.lms.size());
  std::vector<bool> seen(config.lms.size(), false);
  for (const auto& [key, value] : doc["placements"].items()) {
    auto lm = config.lm_index_by_name(key);
    if (!lm || !value.is_string()) return std::nullopt;
    const std::string v = value.get<std::string>();
    if (v == "off") {
      a[*lm] = Placement::off();
    } else {
      const auto colon = v.find(':');
      if (colon == std::string::npos) return std::nullopt;
      const std::string mode = v.substr(0, colon);
      int units = 0;
      try {
        std::size_t used = 0;
        units = std::stoi(v.substr(colon + 1), &used);
        if (used != v.size() - colon - 1) return std::nullopt;
      } catch (const std::exception&) {
        return std::nullopt;
      }
      if (mode == "cpu") {
        a[*lm] = Placement::cpu(units);
      } else if (mode == "gpu") {
        a[*lm] = Placement::gpu(units);
      } else {
        return std::nullopt;
      }
    }
    seen[*lm] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) return std::nullopt;
  return a;
}

// ---------------------------------------------------------------------------
// Engine adapters

AgenticPlanner::AgenticPlanner(std::shared_ptr<PlannerBackend> backend) : backend_(std::move(backend)) {
  if (!backend_) backend_ = std::make_shared<ScriptedPlannerBackend>();
}

std::optional<MacroPolicy> AgenticPlanner::plan(const PlanContext& ctx) {
  PlanResult r = plan_macro(*backend_, memory_, ctx);
  MacroPolicy policy = r.policy;
  history_.push_back(std::move(r));
  return policy;
}

void AgenticPlanner::epoch_closed(int epoch, const EpochTelemetry& telemetry, const MacroPolicy& policy) {
  record_case(memory_, epoch, telemetry, policy);
}

std::optional<std::string> AgenticPlanner::last_fallback() const {
  if (history_.empty() || !history_.back().fallback) return std::nullopt;
  return history_.back().reason;
}

int AgenticPlanner::fallbacks() const {
  return static_cast<int>(std::count_if(history_.begin(), history_.end(), [](const auto& r) { return r.fallback; }));
}

RoutingMatrix AgenticRouter::route(const WorldView& world, Rng& rng) {
  if (world.macro) return schedule_prompts(*world.macro, world, rng);
  return schedule_prompts(random_baseline_policy(*world.config), world, rng);
}

DeploymentAction AgenticDeployer::decide(const NodeSnapshot& node, const WorldView& world, Rng& /*rng*/) {
  const SimConfig& config = *world.config;
  const std::set<LmIndex> roles =
      world.macro ? world.macro->node_roles[node.node] : greedy_roles(config)[node.node];
  DeploymentAction scripted = deploy_control(node, roles, config);
  if (!backend_) return scripted;
  DeployRequest req;
  req.config = &config;
  req.node = &node;
  req.roles = &roles;
  req.prompt = render_deploy_prompt(req);
  try {
    auto parsed = parse_deployment_action(backend_->complete(req), config);
    if (!parsed) return scripted;
    const ServerSpec& spec = config.servers[node.node];
    for (LmIndex i = 0; i < parsed->size(); ++i) {
      if (!placement_allowed(config.lms[i], spec, (*parsed)[i])) return scripted;
    }
    if (!check_headroom(spec, *parsed, config.lms)) return scripted;
    return *parsed;
  } catch (const std::exception&) {
    return scripted;
  }
}

}  // namespace edgellm
