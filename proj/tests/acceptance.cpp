// Acceptance run: one PASS/FAIL line per criterion. Exits nonzero on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "crafted_policies.hpp"
#include "edgellm/agentic.hpp"
#include "edgellm/baselines.hpp"
#include "edgellm/dpp.hpp"
#include "edgellm/experiment.hpp"
#include "edgellm/metrics.hpp"
#include "edgellm/planner_backend.hpp"
#include "edgellm/scenario.hpp"
#include "edgellm/stats.hpp"
#include "fixtures.hpp"

using namespace edgellm;
using namespace edgellm::testing;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kOracleTol = 1e-9;
constexpr int kOracleCases = 1000;
constexpr double kOracleBudgetS = 5.0;
constexpr int kArgmaxCases = 200;
constexpr double kArgmaxBudgetS = 30.0;
constexpr int kSafetySlots = 2000;
constexpr int kSafetySeeds = 5;
constexpr double kSafetyBudgetS = 120.0;
constexpr double kStabilityLoad = 0.7;
constexpr int kStabilitySlots = 2000;
constexpr int kCapacitySlots = 300;
constexpr int kBlockSlots = 50;
constexpr double kTrendAlpha = 0.05;
constexpr int kOrderingSeeds = 5;
constexpr int kOrderingEpochs = 30;
constexpr double kOrderingBudgetS = 600.0;
constexpr double kFairnessFloor = 0.85;
constexpr double kLatencyReduction = 0.60;
constexpr double kSuccessFloor = 0.4;
constexpr double kStarvedCeiling = 0.3;
constexpr double kEarlyRatio = 0.8;
constexpr int kCraftedCount = 20;

const std::string kScenarioDir = EDGELLM_SCENARIO_DIR;

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int g_failures = 0;

void report(int n, const std::string& title, const std::function<Verdict()>& body, double budget_s = 0.0) {
  Clock clock;
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, fmt::format("exception: {}", e.what())};
  }
  const double t = clock.seconds();
  if (budget_s > 0 && t > budget_s) {
    v.pass = false;
    v.detail += fmt::format("; over the {:.0f} s budget", budget_s);
  }
  if (!v.pass) ++g_failures;
  fmt::print("criterion {:2} {} {} [{:.1f} s] {}\n", n, v.pass ? "PASS" : "FAIL", title, t, v.detail);
  std::fflush(stdout);
}

bool near(double a, double b) { return std::abs(a - b) <= kOracleTol * std::max(1.0, std::abs(b)); }

// ---------------------------------------------------------------------------
// Straight-line reference formulas

double ref_jain(const std::vector<double>& x) {
  double s = 0, q = 0;
  for (double v : x) {
    s += v;
    q += v * v;
  }
  return q == 0 ? 1.0 / x.size() : s * s / (x.size() * q);
}

double ref_fnorm(double f, std::size_t n) { return n == 1 ? 1.0 : (f - 1.0 / n) / (1.0 - 1.0 / n); }

double ref_tnorm(const std::vector<LedgerRow>& rows, double tau) {
  double s = 0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.success) {
      s += r.t_q / tau;
      ++n;
    }
  }
  return n ? s / n : 1.0;
}

double ref_objective(double t, double f, double lambda) { return lambda * t + (1 - lambda) * (1 - f); }

double ref_reward(const std::vector<LedgerRow>& rows, std::size_t lms, double tau, double lambda) {
  if (rows.empty()) return 1.0;
  std::vector<double> arr(lms, 0), ok(lms, 0);
  for (const auto& r : rows) {
    arr[r.lm] += 1;
    ok[r.lm] += r.success ? 1 : 0;
  }
  std::vector<double> rho;
  for (std::size_t i = 0; i < lms; ++i) {
    if (arr[i] > 0) rho.push_back(ok[i] / arr[i]);
  }
  const double f = ref_fnorm(ref_jain(rho), rho.size());
  return 1.0 - ref_objective(ref_tnorm(rows, tau), f, lambda);
}

struct RefDpp {
  std::vector<double> mu;
  double price = 0;
  double cost = 0;
  double churn = 0;
  double score = 0;
};

RefDpp ref_dpp(const ServerSpec& node, const DeploymentAction& a, const DeploymentAction& prev,
               const std::vector<double>& q, int committed_vgpus, double img, const DppParams& p,
               const SimConfig& c) {
  double cores = 0, ram = 0, vgpus = 0;
  int gpu_replicas = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].active()) continue;
    ram += c.lms[i].deploy_ram_gb;
    if (a[i].on_cpu()) cores += a[i].units;
    if (a[i].on_gpu()) {
      vgpus += a[i].units;
      ++gpu_replicas;
    }
  }
  auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };
  const double eta_cpu = clamp01(1 - cores / node.cpu_cores);
  const double eta_mem = clamp01(1 - ram / node.ram_gb);
  const double eta_gpu = node.vgpu_units > 0 ? clamp01(1 - vgpus / node.vgpu_units) : 0.0;
  auto f = [&](double x) { return p.epsilon + (1 - p.epsilon) * x; };
  RefDpp r;
  r.mu.assign(a.size(), 0.0);
  double service = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].on_cpu()) r.mu[i] = p.alpha_cpu[i] * f(eta_cpu) * f(eta_mem);
    if (a[i].on_gpu()) r.mu[i] = p.alpha_gpu[i] * f(eta_gpu);
    service += q[i] * r.mu[i];
  }
  const double eta_now = node.vgpu_units > 0 ? clamp01(1.0 - double(committed_vgpus) / node.vgpu_units) : 1.0;
  r.price = p.p0 + p.p1 * (1 - eta_now) + p.p2 * img;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] == prev[i])) r.churn += p.lambda_churn * (1 + p.kappa * q[i]);
  }
  r.cost = r.price * gpu_replicas + r.churn;
  r.score = service - p.v * r.cost;
  return r;
}

std::vector<LedgerRow> random_rows(std::mt19937_64& g, std::size_t lms, double tau) {
  std::vector<LedgerRow> rows(static_cast<std::size_t>(uniform_int(g, 0, 40)));
  for (auto& r : rows) {
    r.lm = static_cast<LmIndex>(uniform_int(g, 0, static_cast<int>(lms) - 1));
    r.success = uniform_int(g, 0, 2) > 0;
    r.t_q = r.success ? uniform(g, 0, tau) : tau;
  }
  return rows;
}

NodeSnapshot random_snapshot(std::mt19937_64& g, const SimConfig& c, NodeIndex n,
                             const std::vector<DeploymentAction>& actions) {
  NodeSnapshot s;
  s.node = n;
  s.current = actions[static_cast<std::size_t>(uniform_int(g, 0, static_cast<int>(actions.size()) - 1))];
  s.backlog.resize(c.lms.size());
  s.queued_requests.assign(c.lms.size(), 0);
  for (auto& b : s.backlog) b = uniform_int(g, 0, 2) == 0 ? 0.0 : uniform(g, 0.0, 40.0);
  s.phase.assign(c.lms.size(), std::nullopt);
  for (LmIndex i = 0; i < c.lms.size(); ++i) {
    if (!s.current[i].active()) continue;
    s.phase[i] = ReplicaPhase::kRunning;
    s.committed.add(c.lms[i], s.current[i]);
  }
  s.held = s.committed;
  s.image_backlog_share = uniform(g, 0.0, 1.0);
  return s;
}

// ---------------------------------------------------------------------------
// 1

Verdict formula_oracles() {
  const SimConfig c = default_scenario_config();
  std::mt19937_64 g(2024);
  int bad = 0;
  std::string first;
  auto expect = [&](bool ok, const std::string& what) {
    if (ok) return;
    if (bad++ == 0) first = what;
  };
  const std::vector<double> one_hot{1, 0, 0, 0};
  const std::vector<double> flat{1, 1, 1, 1};
  expect(jain(one_hot) == 0.25, "jain one-hot");
  expect(jain(flat) == 1.0, "jain flat");

  const auto inference = c.inference_nodes();
  for (int t = 0; t < kOracleCases; ++t) {
    std::vector<double> rho(static_cast<std::size_t>(uniform_int(g, 1, 8)));
    for (auto& x : rho) x = uniform_int(g, 0, 5) == 0 ? 0.0 : uniform(g, 0, 1);
    const double f = jain(rho);
    expect(near(f, ref_jain(rho)), "jain");
    expect(near(normalize_fairness(f, rho.size()), ref_fnorm(ref_jain(rho), rho.size())), "normalize_fairness");

    const double tau = uniform(g, 60, 1800);
    const double lambda = uniform(g, 0, 1);
    const auto rows = random_rows(g, c.lms.size(), tau);
    expect(near(normalized_latency(rows, tau).value, ref_tnorm(rows, tau)), "normalized_latency");
    const double tn = uniform(g, 0, 1);
    const double fn = uniform(g, 0, 1);
    expect(near(composite_objective(tn, fn, lambda), ref_objective(tn, fn, lambda)), "composite_objective");
    const auto reward = slot_reward(rows, 0, c.lms.size(), tau, lambda);
    expect(reward && near(*reward, ref_reward(rows, c.lms.size(), tau, lambda)), "slot_reward");
    expect(!slot_reward(rows, 1, c.lms.size(), tau, lambda), "slot_reward pending");

    const NodeIndex n = inference[static_cast<std::size_t>(uniform_int(g, 0, static_cast<int>(inference.size()) - 1))];
    const auto actions = enumerate_actions(c.servers[n], c);
    const auto snap = random_snapshot(g, c, n, actions);
    const auto& a = actions[static_cast<std::size_t>(uniform_int(g, 0, static_cast<int>(actions.size()) - 1))];
    DppParams p = c.dpp;
    p.v = uniform(g, 0.1, 5);
    p.p0 = uniform(g, 0, 0.5);
    p.p1 = uniform(g, 0, 0.5);
    p.p2 = uniform(g, 0, 0.5);
    p.lambda_churn = uniform(g, 0, 0.3);
    p.kappa = uniform(g, 0, 2);
    p.epsilon = uniform(g, 0, 0.5);
    for (auto& x : p.alpha_cpu) x = uniform(g, 0.01, 2);
    for (auto& x : p.alpha_gpu) x = uniform(g, 0.01, 2);
    const auto ref = ref_dpp(c.servers[n], a, snap.current, snap.backlog, snap.committed.vgpus,
                             snap.image_backlog_share, p, c);
    const auto mu = dpp_service_proxy(c.servers[n], a, p, c);
    for (std::size_t i = 0; i < mu.size(); ++i) expect(near(mu[i], ref.mu[i]), "dpp proxy");
    const double price = dpp_gpu_price(c.servers[n], snap, p);
    expect(near(price, ref.price), "dpp price");
    expect(near(dpp_cost(price, a, snap.current, snap.backlog, p), ref.cost), "dpp cost");
    expect(near(dpp_score(c.servers[n], a, snap.current, snap.backlog, price, p, c).score, ref.score), "dpp score");
  }
  if (bad) return {false, fmt::format("{} mismatches, first: {}", bad, first)};
  return {true, fmt::format("{} random cases per formula within {:g}", kOracleCases, kOracleTol)};
}

// ---------------------------------------------------------------------------
// 2

std::vector<DeploymentAction> brute_force_actions(const ServerSpec& node, const SimConfig& c) {
  std::vector<Placement> modes{Placement::off()};
  for (int x : c.dpp.cpu_grid) modes.push_back(Placement::cpu(x));
  for (int x : c.dpp.gpu_grid) modes.push_back(Placement::gpu(x));
  const std::size_t n = c.lms.size();
  std::vector<std::size_t> idx(n, 0);
  std::vector<DeploymentAction> out;
  while (true) {
    DeploymentAction a(n);
    bool ok = node.hosts_inference;
    int cores = 0, vgpus = 0;
    double ram = 0, vram = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = modes[idx[i]];
      if (a[i].on_cpu() && !c.lms[i].cpu_feasible) ok = false;
      if (a[i].on_gpu() && !node.gpu_capable) ok = false;
      if (a[i].active()) ram += c.lms[i].deploy_ram_gb;
      if (a[i].on_cpu()) cores += a[i].units;
      if (a[i].on_gpu()) {
        vgpus += a[i].units;
        vram += c.lms[i].min_vram_gb;
      }
    }
    if (!node.hosts_inference) ok = a == DeploymentAction(n);
    if (ok && cores <= node.cpu_cores && vgpus <= node.vgpu_units && ram <= node.ram_gb + 1e-9 &&
        vram <= node.vram_gb + 1e-9) {
      out.push_back(a);
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == modes.size()) idx[k++] = 0;
    if (k == n) break;
  }
  return out;
}

DeploymentAction brute_force_argmax(const ServerSpec& node, const NodeSnapshot& s, const SimConfig& c) {
  std::vector<DeploymentAction> cands;
  for (const auto& a : brute_force_actions(node, c)) {
    bool ok = true;
    if (s.transient) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == s.current[i]) continue;
        const bool moving = s.phase[i] && (*s.phase[i] == ReplicaPhase::kPending || *s.phase[i] == ReplicaPhase::kStarting);
        if (moving || a[i].active()) ok = false;
      }
    }
    if (ok) cands.push_back(a);
  }
  if (std::find(cands.begin(), cands.end(), s.current) == cands.end()) cands.push_back(s.current);
  std::vector<RefDpp> scores;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : cands) {
    scores.push_back(ref_dpp(node, a, s.current, s.backlog, s.committed.vgpus, s.image_backlog_share, c.dpp, c));
    best = std::max(best, scores.back().score);
  }
  // Ties: fewer GPU replicas, then lower churn, then the smaller action.
  std::optional<std::size_t> pick;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    if (scores[k].score < best - kDppTieTolerance) continue;
    if (!pick) {
      pick = k;
      continue;
    }
    const auto& a = cands[k];
    const auto& b = cands[*pick];
    const int ga = a.gpu_instances();
    const int gb = b.gpu_instances();
    bool better;
    if (ga != gb) {
      better = ga < gb;
    } else if (std::abs(scores[k].churn - scores[*pick].churn) > kDppTieTolerance) {
      better = scores[k].churn < scores[*pick].churn;
    } else {
      better = a < b;
    }
    if (better) pick = k;
  }
  return cands[*pick];
}

Verdict dpp_argmax() {
  const SimConfig c = default_scenario_config();
  std::mt19937_64 g(77);
  const auto inference = c.inference_nodes();
  int mismatches = 0;
  int transient = 0;
  for (int t = 0; t < kArgmaxCases; ++t) {
    const NodeIndex n = inference[static_cast<std::size_t>(t) % inference.size()];
    const auto actions = enumerate_actions(c.servers[n], c);
    auto s = random_snapshot(g, c, n, actions);
    if (uniform_int(g, 0, 2) == 0) {
      for (LmIndex i = 0; i < c.lms.size(); ++i) {
        if (s.current[i].active() && uniform_int(g, 0, 1) == 0) {
          s.phase[i] = uniform_int(g, 0, 1) ? ReplicaPhase::kStarting : ReplicaPhase::kPending;
          s.transient = true;
        }
      }
    }
    transient += s.transient;
    const auto mine = dpp_select(c.servers[n], s, s.backlog, c.dpp, c).action;
    if (!(mine == brute_force_argmax(c.servers[n], s, c))) ++mismatches;
  }
  return {mismatches == 0,
          fmt::format("{} snapshots ({} transient), {} mismatches", kArgmaxCases, transient, mismatches)};
}

// ---------------------------------------------------------------------------
// 3

Verdict conservation_and_safety() {
  long slots_checked = 0;
  long events_checked = 0;
  int unbalanced = 0;
  int over_budget = 0;
  int over_infer = 0;
  int repeated = 0;
  for (int seed = 1; seed <= kSafetySeeds; ++seed) {
    SimConfig c = default_scenario_config();
    c.seed = static_cast<std::uint64_t>(seed);
    Simulation sim(c, make_policy_set(PolicyName::kRR, c), nullptr, SimOptions{false});
    sim.set_after_event([&](NodeIndex n) {
      ++events_checked;
      const auto& node = sim.nodes()[n];
      if (!node.held_use().fits(c.servers[n]) || !node.committed_use().fits(c.servers[n])) ++over_budget;
    });
    for (int s = 0; s < kSafetySlots; ++s) {
      sim.run_slot();
      ++slots_checked;
      if (!sim.conservation().balanced()) ++unbalanced;
    }
    for (const auto& a : sim.audits()) {
      if (a.infer_seconds > a.required_seconds + 1e-9) ++over_infer;
      for (int k : a.completions) repeated += k > 1;
    }
  }
  const bool ok = unbalanced == 0 && over_budget == 0 && over_infer == 0 && repeated == 0;
  return {ok, fmt::format("{} slots, {} events; unbalanced {}, over budget {}, over-inferred {}, repeated prompts {}",
                          slots_checked, events_checked, unbalanced, over_budget, over_infer, repeated)};
}

// ---------------------------------------------------------------------------
// 4

struct BacklogTrace {
  std::vector<double> block_max;  // per block of slots: max over slots of the max per-type backlog
  double mean_lm4 = 0.0;
};

BacklogTrace trace_backlog(const SimConfig& c, PolicyName policy) {
  Simulation sim(c, make_policy_set(policy, c), nullptr, SimOptions{false});
  BacklogTrace out;
  double block = 0.0;
  const LmIndex lm4 = *c.lm_index(4);
  for (int s = 0; s < kStabilitySlots; ++s) {
    const auto o = sim.run_slot();
    std::vector<double> per_type(c.lms.size(), 0.0);
    for (const auto& n : o.nodes) {
      for (LmIndex i = 0; i < c.lms.size(); ++i) per_type[i] += n.backlog[i];
    }
    block = std::max(block, *std::max_element(per_type.begin(), per_type.end()));
    out.mean_lm4 += per_type[lm4] / kStabilitySlots;
    if ((s + 1) % kBlockSlots == 0) {
      out.block_max.push_back(block);
      block = 0.0;
    }
  }
  return out;
}

Verdict queue_stability() {
  SimConfig c = default_scenario_config();
  const auto cap = measure_capacity(c, PolicyName::kRL, kCapacitySlots, 1);
  set_presence_for_load(c, cap, kStabilityLoad);
  const auto rl = trace_backlog(c, PolicyName::kRL);
  const auto rf = trace_backlog(c, PolicyName::kRF);
  const auto mk = mann_kendall(rl.block_max, kTrendAlpha);
  const bool ok = mk.trend != 1 && rf.mean_lm4 > rl.mean_lm4;
  return {ok, fmt::format("capacity [{:.3f}, {:.3f}, {:.3f}, {:.3f}] prompts/s; RL block-max trend z={:.2f} p={:.3f} "
                          "(last block {:.0f}); mean LM4 backlog RF {:.1f} vs RL {:.1f}",
                          cap[0], cap[1], cap[2], cap[3], mk.z, mk.p_value, rl.block_max.back(), rf.mean_lm4,
                          rl.mean_lm4)};
}

// ---------------------------------------------------------------------------
// 5, 6

struct PolicyRuns {
  PolicyName policy;
  RunSummary summary;
};

std::vector<PolicyRuns> g_default_runs;

const RunSummary& summary_of(PolicyName p) {
  for (const auto& r : g_default_runs) {
    if (r.policy == p) return r.summary;
  }
  throw std::logic_error("policy not run");
}

Verdict ordering() {
  const SimConfig c = load_config_or_throw(kScenarioDir + "/paper_default.json");
  std::vector<std::uint64_t> seeds;
  for (int s = 1; s <= kOrderingSeeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  for (PolicyName p : {PolicyName::kMA, PolicyName::kRL, PolicyName::kRF, PolicyName::kRR, PolicyName::kAL,
                       PolicyName::kLL, PolicyName::kMAL}) {
    std::vector<std::vector<LedgerRow>> ledgers;
    for (auto& run : run_seeds(c, p, seeds, kOrderingEpochs)) ledgers.push_back(std::move(run.ledger));
    g_default_runs.push_back({p, summarize_ledgers(to_string(p), ledgers, c)});
  }
  const auto& ma = summary_of(PolicyName::kMA);
  const auto& rl = summary_of(PolicyName::kRL);
  const auto& rf = summary_of(PolicyName::kRF);
  const double reduction = 1.0 - ma.global_mean_latency_s.mean / rf.global_mean_latency_s.mean;
  const bool order = ma.objective.mean < rl.objective.mean && rl.objective.mean < rf.objective.mean;
  const bool ok = order && ma.f_norm.mean >= kFairnessFloor && reduction >= kLatencyReduction;
  std::string others;
  for (const auto& r : g_default_runs) {
    others += fmt::format(" {}={:.3f}", r.summary.policy, r.summary.objective.mean);
  }
  return {ok, fmt::format("objective MA {:.3f} < RL {:.3f} < RF {:.3f}: {}; F_norm(MA) {:.3f}; latency MA {:.1f} s vs "
                          "RF {:.1f} s, reduction {:.1f}%; all:{}",
                          ma.objective.mean, rl.objective.mean, rf.objective.mean, order ? "yes" : "no",
                          ma.f_norm.mean, ma.global_mean_latency_s.mean, rf.global_mean_latency_s.mean,
                          100 * reduction, others)};
}

Verdict per_lm_floor() {
  if (g_default_runs.empty()) return {false, "default-scenario runs unavailable"};
  const SimConfig c = default_scenario_config();
  const LmIndex lm4 = *c.lm_index(4);
  const auto& ma = summary_of(PolicyName::kMA);
  double floor = 1.0;
  std::string ma_detail;
  for (LmIndex i = 0; i < c.lms.size(); ++i) {
    floor = std::min(floor, ma.lm_success_ratio[i].mean);
    ma_detail += fmt::format(" {}={:.2f}", c.lms[i].name, ma.lm_success_ratio[i].mean);
  }
  std::string starved;
  for (const auto& r : g_default_runs) {
    if (r.policy == PolicyName::kMA) continue;
    const double s = r.summary.lm_success_ratio[lm4].mean;
    if (s < kStarvedCeiling) starved += fmt::format(" {}={:.2f}", r.summary.policy, s);
  }
  const bool ok = floor >= kSuccessFloor && !starved.empty();
  return {ok, fmt::format("MA success ratios{}; baselines with LM4 below {:.1f}:{}", ma_detail, kStarvedCeiling,
                          starved.empty() ? " none" : starved)};
}

// ---------------------------------------------------------------------------
// 7

Verdict learning_curve() {
  const SimConfig c = load_config_or_throw(kScenarioDir + "/misrouted_start.json");
  std::vector<std::uint64_t> seeds;
  for (int s = 1; s <= kOrderingSeeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  const auto runs = run_seeds(c, PolicyName::kMA, seeds, kOrderingEpochs);
  std::vector<double> series(kOrderingEpochs, 0.0);
  for (const auto& r : runs) {
    for (int e = 0; e < kOrderingEpochs; ++e) series[e] += r.telemetry[e].objective / runs.size();
  }
  const std::vector<double> tail(series.begin() + 4, series.end());
  const auto mk = mann_kendall(tail, kTrendAlpha);
  const bool ok = series[4] <= kEarlyRatio * series[0] && mk.trend != 1;
  return {ok, fmt::format("epoch 1 {:.3f}, epoch 5 {:.3f} (ratio {:.2f}), epoch 30 {:.3f}; epochs 5-30 trend z={:.2f} "
                          "p={:.3f}",
                          series[0], series[4], series[4] / series[0], series.back(), mk.z, mk.p_value)};
}

// ---------------------------------------------------------------------------
// 8

class FixedAnswer : public PlannerBackend {
 public:
  explicit FixedAnswer(std::string text) : text_(std::move(text)) {}
  std::string complete(const PlannerRequest&) override { return text_; }
  std::string name() const override { return "fixed"; }

 private:
  std::string text_;
};

Verdict validation_fallback() {
  SimConfig c = crafting_config();
  c.slots_per_epoch = 2;
  const auto answers = crafted_invalid_answers(c);
  const MacroPolicy baseline = random_baseline_policy(c);
  int fell_back = 0;
  int logged = 0;
  int invalid_reached = 0;
  std::string missed;
  for (const auto& a : answers) {
    auto planner = std::make_shared<AgenticPlanner>(std::make_shared<FixedAnswer>(a.text));
    Simulation sim(c, {std::make_shared<AgenticRouter>(), std::make_shared<AgenticDeployer>(), planner});
    sim.run_epoch();
    if (!sim.macro_policy() || !macro_policy_violations(*sim.macro_policy(), c).empty()) ++invalid_reached;
    const bool fb = planner->last_fallback().has_value() && *sim.macro_policy() == baseline;
    const bool log = std::any_of(sim.events().begin(), sim.events().end(), [](const auto& e) {
      return e.kind == EventKind::kPlannerFallback && e.detail.starts_with("planner answer rejected");
    });
    fell_back += fb;
    logged += log;
    if (!fb || !log) missed += " " + a.name;
  }
  const int n = static_cast<int>(answers.size());
  const bool ok = n == kCraftedCount && fell_back == n && logged == n && invalid_reached == 0;
  return {ok, fmt::format("{} crafted answers: {} fell back, {} logged, {} invalid reached the engine{}", n, fell_back,
                          logged, invalid_reached, missed.empty() ? "" : "; missed:" + missed)};
}

// ---------------------------------------------------------------------------
// 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const auto root = fs::temp_directory_path() / "edgellm_acceptance_determinism";
  fs::remove_all(root);
  const std::uint64_t calls_before = network_calls();
  int compared = 0;
  std::string diff;
  for (PolicyName p : {PolicyName::kMA, PolicyName::kRL}) {
    std::vector<fs::path> dirs;
    std::vector<std::string> reports;
    for (int rep = 0; rep < 2; ++rep) {
      RunManifest m;
      m.scenario_path = kScenarioDir + "/paper_default.json";
      m.policy = p;
      m.seeds = {1, 2};
      m.epochs = 3;
      m.out_dir = (root / fmt::format("{}_{}", to_string(p), rep)).string();
      std::ostringstream log;
      cmd_run(m, log);
      std::ostringstream rpt;
      cmd_report(m.out_dir, rpt);
      dirs.emplace_back(m.out_dir);
      // The header line names the run directory; everything else must match.
      std::string text = rpt.str();
      for (auto pos = text.find(m.out_dir); pos != std::string::npos; pos = text.find(m.out_dir)) {
        text.replace(pos, m.out_dir.size(), "<run>");
      }
      reports.push_back(text);
    }
    if (reports[0] != reports[1]) diff += fmt::format(" {}:report", to_string(p));
    for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), dirs[0]);
      if (rel == "manifest.json") continue;  // names its own output directory
      ++compared;
      if (slurp(entry.path()) != slurp(dirs[1] / rel)) diff += fmt::format(" {}:{}", to_string(p), rel.string());
    }
  }
  const std::uint64_t calls = network_calls() - calls_before;
  fs::remove_all(root);
  const bool ok = diff.empty() && calls == 0 && compared > 0;
  return {ok, fmt::format("{} files compared across MA and RL reruns, differences:{}; network calls {}", compared,
                          diff.empty() ? " none" : diff, calls)};
}

// ---------------------------------------------------------------------------
// 10

struct Bench {
  SimConfig config;
  EngineRecorder rec;
  std::unique_ptr<NodeRuntime> node;

  explicit Bench(SimConfig c) : config(std::move(c)) {
    rec.completions.assign(config.lms.size(), 0);
    rec.failures.assign(config.lms.size(), 0);
    node = std::make_unique<NodeRuntime>(config, 0, rec);
  }
};

Verdict lifecycle() {
  std::vector<std::string> failed;
  {
    Bench b(single_node_config({make_lm(1, 112.5, 1000)}));
    b.node->install_running(0, Placement::gpu(1));
    b.node->dispatch(make_request(1, 0, 8), 0.0);
    b.node->advance(2000);
    Bench late(single_node_config({make_lm(1, 112.5 + 1e-6, 1000)}));
    late.node->install_running(0, Placement::gpu(1));
    late.node->dispatch(make_request(1, 0, 8), 0.0);
    late.node->advance(2000);
    const bool ok = b.rec.ledger.size() == 1 && b.rec.ledger[0].success && b.rec.ledger[0].t_q == 900.0 &&
                    late.rec.ledger.size() == 1 && !late.rec.ledger[0].success;
    if (!ok) failed.push_back("boundary");
  }
  {
    Bench b(single_node_config({make_lm(1, 1, 4), make_lm(2, 1, 4)}));
    DeploymentAction first(2);
    first[0] = Placement::gpu(1);
    b.node->apply_deployment(first, 0.0);
    b.node->advance(5.0);
    DeploymentAction more = first;
    more[1] = Placement::cpu(2);
    const auto r = b.node->apply_deployment(more, 5.0);
    const bool ok = r.voided == 1 && !b.node->committed_action()[1].active();
    if (!ok) failed.push_back("voiding");
  }
  {
    Bench b(single_node_config({make_lm(1, 1, 4)}));
    b.node->install_running(0, Placement::cpu(2));
    b.node->dispatch(make_request(1, 0, 8), 0.0);
    b.node->advance(7.0);
    DeploymentAction gpu(1);
    gpu[0] = Placement::gpu(1);
    b.node->apply_deployment(gpu, 7.0);
    b.node->advance(100.0);
    bool ok = b.rec.audits.size() == 1 && b.rec.audits[0].prompts_completed == 8 && b.rec.audits[0].interruptions == 1;
    if (ok) {
      for (int k : b.rec.audits[0].completions) ok &= k == 1;
      ok &= b.rec.audits[0].infer_seconds <= b.rec.audits[0].required_seconds + 1e-9;
    }
    if (!ok) failed.push_back("checkpoint");
  }
  {
    Bench b(single_node_config({make_lm(1, 1, 4), make_lm(2, 1, 4)}, make_server("n", 8, 16, 1, 24)));
    b.node->install_running(0, Placement::gpu(1));
    DeploymentAction swap(2);
    swap[1] = Placement::gpu(1);
    b.node->apply_deployment(swap, 0.0);
    b.node->advance(9.999);
    bool ok = b.node->replicas().size() == 2;
    for (const auto& r : b.node->replicas()) {
      if (r.lm == 0) ok &= r.phase == ReplicaPhase::kTerminating;
      if (r.lm == 1) ok &= r.phase == ReplicaPhase::kPending;
    }
    b.node->advance(10.5);
    ok &= b.node->replicas().size() == 1 && b.node->replicas()[0].phase == ReplicaPhase::kStarting;
    if (!ok) failed.push_back("termination hold");
  }
  std::string detail = "boundary, voiding, checkpoint resume, termination hold";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  report(1, "formula oracles", formula_oracles, kOracleBudgetS);
  report(2, "dpp argmax oracle", dpp_argmax, kArgmaxBudgetS);
  report(3, "conservation and safety", conservation_and_safety, kSafetyBudgetS);
  report(4, "queue stability", queue_stability);
  report(5, "ordering reproduction", ordering, kOrderingBudgetS);
  report(6, "per-LM fairness floor", per_lm_floor);
  report(7, "learning curve", learning_curve);
  report(8, "validation fallback", validation_fallback);
  report(9, "determinism", determinism);
  report(10, "lifecycle micro-tests", lifecycle);
  fmt::print("{} of 10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
