#pragma once

// Batch experiments: policy assembly, multi-seed runs, run directories,
// comparison tables, calibration and reports.
//
// Run directory layout:
//   manifest.json          policy, seeds, epochs, backend, scenario path
//   scenario.json          the exact scenario simulated
//   summary.json           mean and 95% CI over seeds
//   seed_<s>/ledger.csv    per-request ledger
//   seed_<s>/telemetry.json per-epoch telemetry
//   seed_<s>/events.log    engine event log
//   seed_<s>/policies.jsonl macro policy per epoch (planner policies only)

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgellm/engine.hpp"
#include "edgellm/ledger.hpp"
#include "edgellm/metrics.hpp"
#include "edgellm/model.hpp"

namespace edgellm {

enum class BackendKind { kScripted, kExternal };

std::string to_string(BackendKind b);
std::optional<BackendKind> parse_backend(const std::string& s);

struct RunManifest {
  std::string scenario_path;
  PolicyName policy = PolicyName::kMA;
  std::vector<std::uint64_t> seeds{1};
  int epochs = 1;
  std::string out_dir;
  BackendKind backend = BackendKind::kScripted;
};

// Errors carrying the CLI exit status: 2 invalid scenario, 3 I/O.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(int exit_code, const std::string& message) : std::runtime_error(message), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

PolicySet make_policy_set(PolicyName policy, const SimConfig& config, BackendKind backend = BackendKind::kScripted);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<LedgerRow> ledger;
  std::vector<EpochTelemetry> telemetry;
  std::vector<MacroPolicy> policies;  // per epoch, planner policies only
  std::vector<std::string> events;    // formatted lines when requested
  int planner_fallbacks = 0;
};

SeedRun run_seed(const SimConfig& config, PolicyName policy, std::uint64_t seed, int epochs,
                 BackendKind backend = BackendKind::kScripted, bool keep_events = false);

// Runs seeds on independent simulator instances, concurrently when cores
// allow; results come back in seed order.
std::vector<SeedRun> run_seeds(const SimConfig& config, PolicyName policy, const std::vector<std::uint64_t>& seeds,
                               int epochs, BackendKind backend = BackendKind::kScripted, bool keep_events = false);

struct Estimate {
  double mean = 0.0;
  double ci95 = 0.0;
  int n = 0;
};

Estimate estimate(const std::vector<double>& xs);

struct RunSummary {
  std::string policy;
  int seeds = 0;
  Estimate objective;
  Estimate t_norm;
  Estimate f_norm;
  Estimate global_mean_latency_s;
  std::vector<Estimate> lm_mean_latency_s;
  std::vector<Estimate> lm_success_ratio;
};

// Per-seed ledger metrics, then mean/CI across seeds.
RunSummary summarize_ledgers(const std::string& policy, const std::vector<std::vector<LedgerRow>>& ledgers,
                             const SimConfig& config);
std::string run_summary_json(const RunSummary& summary, const SimConfig& config);

SimConfig load_config_or_throw(const std::string& path);

// Writes the run directory; returns the summary.
RunSummary cmd_run(const RunManifest& manifest, std::ostream& log);

struct ComparisonRow {
  std::string run_dir;
  RunSummary summary;
};

// Reads each run directory, recomputes summaries from the ledgers, writes
// comparison.csv and scatter.csv into out_dir (when non-empty).
std::vector<ComparisonRow> cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir,
                                       std::ostream& out);

// Writes the frozen parameters (JSON) and a trajectory CSV next to it.
DppParams cmd_calibrate(const std::string& scenario_path, int iterations, const std::string& out_path,
                        std::ostream& log);

// Recomputes the per-epoch objective series and summary of a run directory
// from its ledgers; writes objective_series.csv into the run directory.
void cmd_report(const std::string& run_dir, std::ostream& out);

// Saturated per-LM throughput (prompts/s) under `policy`: every pair
// presents a request every slot and successes are counted after warm-up.
std::vector<double> measure_capacity(const SimConfig& config, PolicyName policy, int slots, std::uint64_t seed);

// Presence probabilities that offer `fraction` of `capacity` per LM, spread
// evenly over inference nodes.
void set_presence_for_load(SimConfig& config, const std::vector<double>& capacity, double fraction);

// Expected prompts per request-bearing draw under the k weights.
double expected_prompts(const WorkloadSpec& workload);

}  // namespace edgellm
