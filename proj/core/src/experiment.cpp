#include "edgellm/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "edgellm/agentic.hpp"
#include "edgellm/baselines.hpp"
#include "edgellm/dpp.hpp"
#include "edgellm/macro_policy.hpp"
#include "edgellm/planner_backend.hpp"
#include "edgellm/scenario.hpp"
#include "edgellm/stats.hpp"

namespace edgellm {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string to_string(BackendKind b) { return b == BackendKind::kScripted ? "scripted" : "external"; }

std::optional<BackendKind> parse_backend(const std::string& s) {
  if (s == "scripted") return BackendKind::kScripted;
  if (s == "external") return BackendKind::kExternal;
  return std::nullopt;
}

PolicySet make_policy_set(PolicyName policy, const SimConfig& config, BackendKind backend) {
  auto planner = [&]() -> std::shared_ptr<Planner> {
    if (backend == BackendKind::kScripted) return std::make_shared<AgenticPlanner>(nullptr);
    auto endpoint = HttpEndpoint::from_env(config.agentic.planner_timeout_s);
    if (!endpoint) throw ExperimentError(1, "external backend needs EDGELLM_PLANNER_URL");
    return std::make_shared<AgenticPlanner>(std::make_shared<HttpPlannerBackend>(*endpoint));
  };
  auto agentic_deployer = [&]() -> std::shared_ptr<Deployer> {
    if (backend == BackendKind::kScripted) return std::make_shared<AgenticDeployer>();
    auto endpoint = HttpEndpoint::from_env(config.agentic.planner_timeout_s);
    if (!endpoint) throw ExperimentError(1, "external backend needs EDGELLM_PLANNER_URL");
    return std::make_shared<AgenticDeployer>(std::make_shared<HttpDeployBackend>(*endpoint));
  };
  switch (policy) {
    case PolicyName::kMA:
      return {std::make_shared<AgenticRouter>(), agentic_deployer(), planner()};
    case PolicyName::kMAL:
      return {std::make_shared<AgenticRouter>(), std::make_shared<DppDeployer>(), planner()};
    case PolicyName::kRR:
      return {std::make_shared<RandomRouter>(), std::make_shared<RandomDeployer>(), nullptr};
    case PolicyName::kRL:
      return {std::make_shared<RandomRouter>(), std::make_shared<DppDeployer>(), nullptr};
    case PolicyName::kAL:
      return {std::make_shared<AverageRouter>(), std::make_shared<DppDeployer>(), nullptr};
    case PolicyName::kLL:
      return {std::make_shared<LocalRouter>(), std::make_shared<DppDeployer>(), nullptr};
    case PolicyName::kRF:
      return {std::make_shared<RandomRouter>(), std::make_shared<FullActivationDeployer>(), nullptr};
  }
  throw std::invalid_argument("unknown policy");
}

namespace {

class EventWriter : public EngineObserver {
 public:
  EventWriter(std::ostream& out, const SimConfig& config) : out_(out), config_(config) {}
  void on_event(const EventRecord& e) override { out_ << format_event(e, config_) << '\n'; }

 private:
  std::ostream& out_;
  const SimConfig& config_;
};

SeedRun run_seed_impl(const SimConfig& base, PolicyName policy, std::uint64_t seed, int epochs, BackendKind backend,
                      std::ostream* events_out, bool keep_events) {
  SimConfig config = base;
  config.seed = seed;
  config.policy = policy;
  PolicySet policies = make_policy_set(policy, config, backend);
  auto planner = std::dynamic_pointer_cast<AgenticPlanner>(policies.planner);
  Simulation sim(config, std::move(policies), nullptr, SimOptions{keep_events});
  std::optional<EventWriter> writer;
  if (events_out) {
    writer.emplace(*events_out, sim.config());
    sim.set_observer(&*writer);
  }
  SeedRun run;
  run.seed = seed;
  for (int e = 0; e < epochs; ++e) {
    run.telemetry.push_back(sim.run_epoch());
    if (sim.macro_policy()) run.policies.push_back(*sim.macro_policy());
  }
  run.ledger = sim.ledger();
  if (keep_events) {
    for (const auto& e : sim.events()) run.events.push_back(format_event(e, sim.config()));
  }
  if (planner) run.planner_fallbacks = planner->fallbacks();
  return run;
}

ojson estimate_json(const Estimate& e) {
  // No samples (an LM that never succeeded has no latency): null, not zero.
  if (e.n == 0) return ojson{{"mean", nullptr}, {"ci95", nullptr}, {"n", 0}};
  return ojson{{"mean", e.mean}, {"ci95", e.ci95}, {"n", e.n}};
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::string telemetry_json(const std::vector<EpochTelemetry>& series, const SimConfig& config) {
  ojson arr = ojson::array();
  for (const auto& t : series) {
    ojson lat = ojson::object();
    ojson rho = ojson::object();
    for (LmIndex i = 0; i < t.per_lm.size(); ++i) {
      lat[config.lms[i].name] = optional_json(t.per_lm[i].mean_latency_s);
      rho[config.lms[i].name] = optional_json(t.per_lm[i].success_ratio);
    }
    ojson backlog = ojson::object();
    for (NodeIndex n = 0; n < t.node_backlog.size(); ++n) {
      ojson row = ojson::object();
      for (LmIndex i = 0; i < t.node_backlog[n].size(); ++i) row[config.lms[i].name] = t.node_backlog[n][i];
      backlog[config.servers[n].id] = row;
    }
    ojson o;
    o["epoch"] = t.epoch;
    o["no_data"] = t.no_data;
    o["success_only_mean_latency_s"] = lat;
    o["success_ratio"] = rho;
    o["global_mean_latency_s"] = optional_json(t.global_mean_latency_s);
    o["F_norm"] = t.f_norm;
    o["T_norm"] = t.t_norm;
    o["objective"] = t.objective;
    o["off_role_ratio"] = t.off_role_ratio;
    o["routed"] = t.routed;
    o["node_backlog"] = backlog;
    arr.push_back(o);
  }
  return arr.dump(2) + "\n";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExperimentError(3, "cannot write " + path.string());
  out << content;
  if (!out) throw ExperimentError(3, "write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExperimentError(3, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LoadedRun {
  SimConfig config;
  std::string policy;
  std::vector<std::uint64_t> seeds;
  int epochs = 0;
  std::vector<std::vector<LedgerRow>> ledgers;
};

LoadedRun load_run(const std::string& run_dir) {
  const fs::path dir(run_dir);
  if (!fs::is_directory(dir)) throw ExperimentError(3, "missing run: " + run_dir);
  LoadedRun run;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    run.policy = manifest.at("policy").get<std::string>();
    run.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
    run.epochs = manifest.at("epochs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ExperimentError(3, fmt::format("corrupt manifest {}: {}", (dir / "manifest.json").string(), e.what()));
  }
  const auto scenario = parse_scenario(read_file(dir / "scenario.json"));
  if (!scenario.config) throw ExperimentError(3, "corrupt scenario " + (dir / "scenario.json").string());
  run.config = *scenario.config;
  for (auto seed : run.seeds) {
    const fs::path ledger_path = dir / fmt::format("seed_{}", seed) / "ledger.csv";
    std::ifstream in(ledger_path);
    if (!in) throw ExperimentError(3, "cannot read " + ledger_path.string());
    try {
      run.ledgers.push_back(read_ledger_csv(in, run.config));
    } catch (const LedgerFormatError& e) {
      throw ExperimentError(3, fmt::format("corrupt ledger {}: {}", ledger_path.string(), e.what()));
    }
  }
  return run;
}

std::string fmt_estimate(const Estimate& e, int digits) {
  if (e.n == 0) return "n/a";
  return fmt::format("{:.{}f} ± {:.{}f}", e.mean, digits, e.ci95, digits);
}

}  // namespace

SeedRun run_seed(const SimConfig& config, PolicyName policy, std::uint64_t seed, int epochs, BackendKind backend,
                 bool keep_events) {
  return run_seed_impl(config, policy, seed, epochs, backend, nullptr, keep_events);
}

std::vector<SeedRun> run_seeds(const SimConfig& config, PolicyName policy, const std::vector<std::uint64_t>& seeds,
                               int epochs, BackendKind backend, bool keep_events) {
  const std::size_t width = std::max(1U, std::thread::hardware_concurrency());
  std::vector<SeedRun> out;
  out.reserve(seeds.size());
  for (std::size_t start = 0; start < seeds.size(); start += width) {
    std::vector<std::future<SeedRun>> batch;
    for (std::size_t i = start; i < std::min(seeds.size(), start + width); ++i) {
      if (width == 1) {
        out.push_back(run_seed(config, policy, seeds[i], epochs, backend, keep_events));
      } else {
        batch.push_back(std::async(std::launch::async, [&, i] {
          return run_seed(config, policy, seeds[i], epochs, backend, keep_events);
        }));
      }
    }
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

Estimate estimate(const std::vector<double>& xs) {
  return {mean(xs), ci95_half_width(xs), static_cast<int>(xs.size())};
}

RunSummary summarize_ledgers(const std::string& policy, const std::vector<std::vector<LedgerRow>>& ledgers,
                             const SimConfig& config) {
  const std::size_t lm_count = config.lms.size();
  std::vector<double> obj;
  std::vector<double> tn;
  std::vector<double> fn;
  std::vector<double> lat;
  std::vector<std::vector<double>> lm_lat(lm_count);
  std::vector<std::vector<double>> lm_rho(lm_count);
  for (const auto& ledger : ledgers) {
    const auto m = ledger_metrics(ledger, lm_count, config.tau_seconds, config.lambda_weight);
    obj.push_back(m.objective);
    tn.push_back(m.t_norm);
    fn.push_back(m.f_norm);
    if (m.global_mean_latency_s) lat.push_back(*m.global_mean_latency_s);
    for (LmIndex i = 0; i < lm_count; ++i) {
      if (m.lm_mean_latency_s[i]) lm_lat[i].push_back(*m.lm_mean_latency_s[i]);
      if (m.lm_success_ratio[i]) lm_rho[i].push_back(*m.lm_success_ratio[i]);
    }
  }
  RunSummary s;
  s.policy = policy;
  s.seeds = static_cast<int>(ledgers.size());
  s.objective = estimate(obj);
  s.t_norm = estimate(tn);
  s.f_norm = estimate(fn);
  s.global_mean_latency_s = estimate(lat);
  for (LmIndex i = 0; i < lm_count; ++i) {
    s.lm_mean_latency_s.push_back(estimate(lm_lat[i]));
    s.lm_success_ratio.push_back(estimate(lm_rho[i]));
  }
  return s;
}

std::string run_summary_json(const RunSummary& s, const SimConfig& config) {
  ojson per_lm = ojson::object();
  for (LmIndex i = 0; i < config.lms.size() && i < s.lm_mean_latency_s.size(); ++i) {
    per_lm[config.lms[i].name] = ojson{{"success_only_mean_latency_s", estimate_json(s.lm_mean_latency_s[i])},
                                       {"success_ratio", estimate_json(s.lm_success_ratio[i])}};
  }
  ojson o;
  o["policy"] = s.policy;
  o["seeds"] = s.seeds;
  o["objective"] = estimate_json(s.objective);
  o["T_norm"] = estimate_json(s.t_norm);
  o["F_norm"] = estimate_json(s.f_norm);
  o["global_mean_latency_s"] = estimate_json(s.global_mean_latency_s);
  o["per_lm"] = per_lm;
  return o.dump(2) + "\n";
}

SimConfig load_config_or_throw(const std::string& path) {
  const ScenarioLoad load = load_scenario(path);
  if (load.io_error) throw ExperimentError(3, "cannot read scenario " + path);
  if (!load.config) {
    std::string msg = "invalid scenario " + path + ":";
    for (const auto& v : load.violations) msg += "\n  " + v.field + ": " + v.message;
    throw ExperimentError(2, msg);
  }
  return *load.config;
}

RunSummary cmd_run(const RunManifest& manifest, std::ostream& log) {
  if (manifest.seeds.empty()) throw ExperimentError(1, "at least one seed is required");
  if (manifest.epochs < 1) throw ExperimentError(1, "epochs must be positive");
  const SimConfig config = load_config_or_throw(manifest.scenario_path);
  const fs::path dir(manifest.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ExperimentError(3, "cannot create " + dir.string() + ": " + ec.message());

  ojson m;
  m["scenario"] = manifest.scenario_path;
  m["policy"] = to_string(manifest.policy);
  m["seeds"] = manifest.seeds;
  m["epochs"] = manifest.epochs;
  m["backend"] = to_string(manifest.backend);
  write_file(dir / "manifest.json", m.dump(2) + "\n");
  write_file(dir / "scenario.json", scenario_to_json(config));

  auto run_one = [&](std::uint64_t seed) {
    const fs::path seed_dir = dir / fmt::format("seed_{}", seed);
    std::error_code err;
    fs::create_directories(seed_dir, err);
    if (err) throw ExperimentError(3, "cannot create " + seed_dir.string());
    std::ofstream events(seed_dir / "events.log", std::ios::binary);
    if (!events) throw ExperimentError(3, "cannot write " + (seed_dir / "events.log").string());
    SeedRun run = run_seed_impl(config, manifest.policy, seed, manifest.epochs, manifest.backend, &events, false);
    std::ostringstream ledger;
    write_ledger_csv(ledger, run.ledger, config);
    write_file(seed_dir / "ledger.csv", ledger.str());
    write_file(seed_dir / "telemetry.json", telemetry_json(run.telemetry, config));
    if (!run.policies.empty()) {
      std::string lines;
      for (const auto& p : run.policies) lines += macro_policy_to_json(p, config) + "\n";
      write_file(seed_dir / "policies.jsonl", lines);
    }
    return run;
  };

  const std::size_t width = std::max(1U, std::thread::hardware_concurrency());
  std::vector<std::vector<LedgerRow>> ledgers;
  for (std::size_t start = 0; start < manifest.seeds.size(); start += width) {
    std::vector<std::future<SeedRun>> batch;
    for (std::size_t i = start; i < std::min(manifest.seeds.size(), start + width); ++i) {
      batch.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async,
                                 [&, i] { return run_one(manifest.seeds[i]); }));
    }
    for (auto& f : batch) {
      SeedRun run = f.get();
      log << fmt::format("seed {}: {} requests, {} planner fallbacks\n", run.seed, run.ledger.size(),
                         run.planner_fallbacks);
      ledgers.push_back(std::move(run.ledger));
    }
  }

  RunSummary summary = summarize_ledgers(to_string(manifest.policy), ledgers, config);
  write_file(dir / "summary.json", run_summary_json(summary, config));
  log << fmt::format("{}: objective {}, F_norm {}, mean latency {} s\n", summary.policy,
                     fmt_estimate(summary.objective, 4), fmt_estimate(summary.f_norm, 4),
                     fmt_estimate(summary.global_mean_latency_s, 1));
  return summary;
}

std::vector<ComparisonRow> cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                                       std::ostream& out) {
  if (run_dirs.size() < 2) throw ExperimentError(1, "compare needs at least two run directories");
  std::vector<ComparisonRow> rows;
  for (const auto& d : run_dirs) {
    LoadedRun run = load_run(d);
    rows.push_back({d, summarize_ledgers(run.policy, run.ledgers, run.config)});
  }
  std::string table = "policy,objective,T_norm,F_norm,mean_latency_s\n";
  std::string scatter = "policy,mean_latency_s,F_norm\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    table += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.3f}\n", s.policy, s.objective.mean, s.t_norm.mean,
                         s.f_norm.mean, s.global_mean_latency_s.mean);
    scatter += fmt::format("{},{:.3f},{:.6f}\n", s.policy, s.global_mean_latency_s.mean, s.f_norm.mean);
  }
  out << table;
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ExperimentError(3, "cannot create " + out_dir);
    write_file(fs::path(out_dir) / "comparison.csv", table);
    write_file(fs::path(out_dir) / "scatter.csv", scatter);
  }
  return rows;
}

DppParams cmd_calibrate(const std::string& scenario_path, int iterations, const std::string& out_path,
                        std::ostream& log) {
  if (iterations < 0) throw ExperimentError(1, "iterations must be non-negative");
  const SimConfig config = load_config_or_throw(scenario_path);
  CalibrationOptions options;
  options.iterations = iterations;
  options.slots_per_episode = config.slots_per_epoch;
  options.seed = config.seed;
  const CalibrationResult result = calibrate_dpp(config, options);
  const fs::path out(out_path);
  if (out.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
  }
  write_file(out, dpp_params_to_json(result.params, config));
  fs::path trajectory = out;
  trajectory.replace_filename(out.stem().string() + "_trajectory.csv");
  std::ostringstream csv;
  write_calibration_csv(csv, result.trajectory);
  write_file(trajectory, csv.str());
  log << fmt::format("calibrated after {} iterations: lambda_churn {:.4f}, kappa {:.4f}, p1 {:.4f}, p2 {:.4f}\n",
                     iterations, result.params.lambda_churn, result.params.kappa, result.params.p1, result.params.p2);
  return result.params;
}

void cmd_report(const std::string& run_dir, std::ostream& out) {
  const LoadedRun run = load_run(run_dir);
  const SimConfig& config = run.config;
  const double epoch_seconds = config.slots_per_epoch * config.slot_seconds;
  std::size_t total_rows = 0;
  for (const auto& l : run.ledgers) total_rows += l.size();

  std::vector<std::vector<LedgerMetrics>> per_seed;
  for (const auto& l : run.ledgers) {
    per_seed.push_back(epoch_series(l, config.lms.size(), config.tau_seconds, config.lambda_weight, epoch_seconds,
                                    run.epochs));
  }
  std::string csv = "epoch,objective_mean,objective_ci95,T_norm_mean,F_norm_mean,no_data_seeds\n";
  for (int e = 0; e < run.epochs; ++e) {
    std::vector<double> obj;
    std::vector<double> tn;
    std::vector<double> fn;
    int empty = 0;
    for (const auto& s : per_seed) {
      obj.push_back(s[e].objective);
      tn.push_back(s[e].t_norm);
      fn.push_back(s[e].f_norm);
      empty += s[e].no_data;
    }
    const Estimate o = estimate(obj);
    csv += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", e + 1, o.mean, o.ci95, mean(tn), mean(fn), empty);
  }
  write_file(fs::path(run_dir) / "objective_series.csv", csv);

  out << fmt::format("run {} ({}, {} seeds, {} epochs)\n", run_dir, run.policy, run.seeds.size(), run.epochs);
  if (total_rows == 0) {
    out << "no data: the ledgers hold no finalized requests\n";
    return;
  }
  const RunSummary s = summarize_ledgers(run.policy, run.ledgers, config);
  out << fmt::format("objective {}\nT_norm    {}\nF_norm    {}\nmean latency {} s\n", fmt_estimate(s.objective, 4),
                     fmt_estimate(s.t_norm, 4), fmt_estimate(s.f_norm, 4), fmt_estimate(s.global_mean_latency_s, 1));
  for (LmIndex i = 0; i < config.lms.size(); ++i) {
    const auto& lat = s.lm_mean_latency_s[i];
    out << fmt::format("  {}: latency {}, success ratio {}\n", config.lms[i].name,
                       lat.n == 0 ? "n/a" : fmt_estimate(lat, 1) + " s", fmt_estimate(s.lm_success_ratio[i], 3));
  }
  out << "objective by epoch:";
  for (int e = 0; e < run.epochs; ++e) {
    std::vector<double> obj;
    for (const auto& ps : per_seed) obj.push_back(ps[e].objective);
    out << fmt::format(" {:.4f}", mean(obj));
  }
  out << "\n";
}

double expected_prompts(const WorkloadSpec& workload) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < workload.k_weights.size(); ++k) {
    num += static_cast<double>(k) * workload.k_weights[k];
    den += workload.k_weights[k];
  }
  return den > 0 ? num / den : 0.0;
}

std::vector<double> measure_capacity(const SimConfig& base, PolicyName policy, int slots, std::uint64_t seed) {
  SimConfig config = base;
  config.seed = seed;
  for (NodeIndex n = 0; n < config.servers.size(); ++n) {
    for (auto& p : config.workload.presence[n]) p = config.servers[n].hosts_inference ? 1.0 : 0.0;
  }
  config.workload.drift.clear();
  Simulation sim(config, make_policy_set(policy, config), nullptr, SimOptions{false});
  for (int s = 0; s < slots; ++s) sim.run_slot();
  // Skip the first third while queues fill.
  const double warm = (slots / 3) * config.slot_seconds;
  const double span = slots * config.slot_seconds - warm;
  std::vector<double> prompts(config.lms.size(), 0.0);
  for (const auto& r : sim.ledger()) {
    if (r.success && r.finish_s >= warm) prompts[r.lm] += r.k;
  }
  for (double& p : prompts) p /= span;
  return prompts;
}

void set_presence_for_load(SimConfig& config, const std::vector<double>& capacity, double fraction) {
  const auto nodes = config.inference_nodes();
  const double per_draw = expected_prompts(config.workload);
  for (auto& row : config.workload.presence) std::fill(row.begin(), row.end(), 0.0);
  if (nodes.empty() || per_draw <= 0) return;
  for (LmIndex i = 0; i < config.lms.size(); ++i) {
    const double per_slot = fraction * capacity[i] * config.slot_seconds;
    const double p = std::clamp(per_slot / (static_cast<double>(nodes.size()) * per_draw), 0.0, 1.0);
    for (NodeIndex n : nodes) config.workload.presence[n][i] = p;
  }
}

}  // namespace edgellm
