#pragma once

// Performance functionals: per-type service rates, Jain fairness and its
// normalization, normalized latency, the composite objective, the delayed
// per-slot reward, and epoch telemetry assembly.

#include <optional>
#include <span>
#include <vector>

#include "edgellm/ledger.hpp"
#include "edgellm/model.hpp"

namespace edgellm {

struct ServiceRates {
  std::vector<int> arrivals;
  std::vector<int> successes;
  // Empty for types with no arrivals; those are excluded from fairness.
  std::vector<std::optional<double>> rho;

  std::vector<double> present() const;
};

ServiceRates service_rates(std::span<const LedgerRow> rows, std::size_t lm_count);

// (sum)^2 / (I * sum of squares). An all-zero vector yields 1/I. Throws
// std::invalid_argument on an empty vector or a negative entry.
double jain(std::span<const double> rho);

// (F - 1/I) / (1 - 1/I); F outside [1/I, 1] throws std::domain_error.
// A single type is trivially fair: I = 1 yields 1.
double normalize_fairness(double f, std::size_t type_count);

struct NormalizedLatency {
  double value = 1.0;
  bool no_data = true;
};

// Mean of T_q / tau over successful rows; 1.0 with no_data when none.
NormalizedLatency normalized_latency(std::span<const LedgerRow> rows, double tau);

// lambda * T_norm + (1 - lambda) * (1 - F_norm); lower is better.
double composite_objective(double t_norm, double f_norm, double lambda);

struct FairnessSummary {
  double f = 0.0;
  double f_norm = 0.0;
  bool no_data = true;
};

// Jain over the types present in `rates`; no_data with F_norm = 0 if none.
FairnessSummary fairness(const ServiceRates& rates);

// 1 - objective over the slot's cohort, or nullopt while any cohort member is
// still pending.
std::optional<double> slot_reward(std::span<const LedgerRow> cohort, std::size_t pending, std::size_t lm_count,
                                  double tau, double lambda);

struct LmTelemetry {
  int routed = 0;          // requests dispatched in the window
  int routed_prompts = 0;  // their prompts
  int finalized = 0;       // requests completing or failing in the window
  int successes = 0;
  std::optional<double> mean_latency_s;  // success-only
  std::optional<double> success_ratio;
};

struct EpochTelemetry {
  int epoch = 0;
  std::vector<LmTelemetry> per_lm;
  std::optional<double> global_mean_latency_s;
  double f_norm = 0.0;
  double t_norm = 1.0;
  double objective = 1.0;
  double off_role_ratio = 0.0;
  int routed = 0;
  int routed_off_role = 0;
  bool no_data = true;
  // backlog[node][lm] in prompts at window close.
  std::vector<std::vector<double>> node_backlog;

  // Per-LM share of routed requests; the workload-mix vector.
  std::vector<double> arrival_share() const;
};

struct TelemetryInputs {
  int epoch = 0;
  std::span<const LedgerRow> finalized;          // finalized in the window
  std::span<const RoutingLogEntry> routing_log;  // dispatched in the window
  const MacroPolicy* policy = nullptr;           // roles for off-role counting
  std::vector<std::vector<double>> node_backlog;
  std::size_t lm_count = 0;
  double tau = 900.0;
  double lambda = 0.5;
};

EpochTelemetry build_epoch_telemetry(const TelemetryInputs& in);

// Whole-ledger aggregates used by run summaries and reports.
struct LedgerMetrics {
  std::size_t rows = 0;
  double f_norm = 0.0;
  double t_norm = 1.0;
  double objective = 1.0;
  std::optional<double> global_mean_latency_s;
  std::vector<std::optional<double>> lm_mean_latency_s;
  std::vector<std::optional<double>> lm_success_ratio;
  bool no_data = true;
};

LedgerMetrics ledger_metrics(std::span<const LedgerRow> rows, std::size_t lm_count, double tau, double lambda);

// Objective per epoch window [e * span, (e + 1) * span) by finish time.
std::vector<LedgerMetrics> epoch_series(std::span<const LedgerRow> rows, std::size_t lm_count, double tau,
                                        double lambda, double epoch_seconds, int epochs);

}  // namespace edgellm
