#include "edgellm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace edgellm {

std::vector<double> ServiceRates::present() const {
  std::vector<double> out;
  for (const auto& r : rho) {
    if (r) out.push_back(*r);
  }
  return out;
}

ServiceRates service_rates(std::span<const LedgerRow> rows, std::size_t lm_count) {
  ServiceRates out;
  out.arrivals.assign(lm_count, 0);
  out.successes.assign(lm_count, 0);
  out.rho.assign(lm_count, std::nullopt);
  for (const auto& r : rows) {
    if (r.lm >= lm_count) continue;
    ++out.arrivals[r.lm];
    if (r.success) ++out.successes[r.lm];
  }
  for (std::size_t i = 0; i < lm_count; ++i) {
    if (out.arrivals[i] > 0) out.rho[i] = static_cast<double>(out.successes[i]) / out.arrivals[i];
  }
  return out;
}

double jain(std::span<const double> rho) {
  if (rho.empty()) throw std::invalid_argument("jain: empty rate vector");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : rho) {
    if (x < 0) throw std::invalid_argument("jain: negative rate");
    sum += x;
    sum_sq += x * x;
  }
  const double n = static_cast<double>(rho.size());
  if (sum_sq == 0.0) return 1.0 / n;
  return (sum * sum) / (n * sum_sq);
}

double normalize_fairness(double f, std::size_t type_count) {
  if (type_count == 0) throw std::domain_error("normalize_fairness: no types");
  const double floor = 1.0 / static_cast<double>(type_count);
  constexpr double kTol = 1e-12;
  if (f < floor - kTol || f > 1.0 + kTol) {
    throw std::domain_error(fmt::format("normalize_fairness: F={} outside [{}, 1]", f, floor));
  }
  if (type_count == 1) return 1.0;
  return std::clamp((f - floor) / (1.0 - floor), 0.0, 1.0);
}

NormalizedLatency normalized_latency(std::span<const LedgerRow> rows, double tau) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows) {
    if (!r.success) continue;
    sum += r.t_q / tau;
    ++count;
  }
  if (count == 0) return {1.0, true};
  return {sum / static_cast<double>(count), false};
}

double composite_objective(double t_norm, double f_norm, double lambda) {
  return lambda * t_norm + (1.0 - lambda) * (1.0 - f_norm);
}

FairnessSummary fairness(const ServiceRates& rates) {
  const auto present = rates.present();
  if (present.empty()) return {0.0, 0.0, true};
  const double f = jain(present);
  return {f, normalize_fairness(f, present.size()), false};
}

std::optional<double> slot_reward(std::span<const LedgerRow> cohort, std::size_t pending, std::size_t lm_count,
                                  double tau, double lambda) {
  if (pending > 0) return std::nullopt;
  const auto t = normalized_latency(cohort, tau);
  const auto f = fairness(service_rates(cohort, lm_count));
  // An empty cohort has nothing to reward or punish.
  if (cohort.empty()) return 1.0;
  return 1.0 - composite_objective(t.value, f.f_norm, lambda);
}

std::vector<double> EpochTelemetry::arrival_share() const {
  std::vector<double> share(per_lm.size(), 0.0);
  if (routed == 0) return share;
  for (std::size_t i = 0; i < per_lm.size(); ++i) share[i] = static_cast<double>(per_lm[i].routed) / routed;
  return share;
}

EpochTelemetry build_epoch_telemetry(const TelemetryInputs& in) {
  EpochTelemetry t;
  t.epoch = in.epoch;
  t.per_lm.assign(in.lm_count, {});
  t.node_backlog = in.node_backlog;

  for (const auto& e : in.routing_log) {
    if (e.lm >= in.lm_count) continue;
    ++t.per_lm[e.lm].routed;
    t.per_lm[e.lm].routed_prompts += e.k;
    ++t.routed;
    if (in.policy && e.dest < in.policy->node_roles.size() && !in.policy->node_roles[e.dest].contains(e.lm)) {
      ++t.routed_off_role;
    }
  }
  t.off_role_ratio = t.routed > 0 ? static_cast<double>(t.routed_off_role) / t.routed : 0.0;

  std::vector<double> latency_sum(in.lm_count, 0.0);
  double global_sum = 0.0;
  int global_count = 0;
  for (const auto& r : in.finalized) {
    if (r.lm >= in.lm_count) continue;
    auto& lm = t.per_lm[r.lm];
    ++lm.finalized;
    if (r.success) {
      ++lm.successes;
      latency_sum[r.lm] += r.t_q;
      global_sum += r.t_q;
      ++global_count;
    }
  }
  for (std::size_t i = 0; i < in.lm_count; ++i) {
    auto& lm = t.per_lm[i];
    if (lm.successes > 0) lm.mean_latency_s = latency_sum[i] / lm.successes;
    if (lm.finalized > 0) lm.success_ratio = static_cast<double>(lm.successes) / lm.finalized;
  }
  if (global_count > 0) t.global_mean_latency_s = global_sum / global_count;

  const auto latency = normalized_latency(in.finalized, in.tau);
  const auto fair = fairness(service_rates(in.finalized, in.lm_count));
  t.t_norm = latency.value;
  t.f_norm = fair.f_norm;
  t.no_data = in.finalized.empty();
  t.objective = composite_objective(t.t_norm, t.f_norm, in.lambda);
  return t;
}

LedgerMetrics ledger_metrics(std::span<const LedgerRow> rows, std::size_t lm_count, double tau, double lambda) {
  LedgerMetrics m;
  m.rows = rows.size();
  m.no_data = rows.empty();
  const auto latency = normalized_latency(rows, tau);
  const auto rates = service_rates(rows, lm_count);
  m.t_norm = latency.value;
  m.f_norm = fairness(rates).f_norm;
  m.objective = composite_objective(m.t_norm, m.f_norm, lambda);
  std::vector<double> sum(lm_count, 0.0);
  double total = 0.0;
  int count = 0;
  for (const auto& r : rows) {
    if (!r.success || r.lm >= lm_count) continue;
    sum[r.lm] += r.t_q;
    total += r.t_q;
    ++count;
  }
  if (count > 0) m.global_mean_latency_s = total / count;
  m.lm_mean_latency_s.assign(lm_count, std::nullopt);
  m.lm_success_ratio = rates.rho;
  for (std::size_t i = 0; i < lm_count; ++i) {
    if (rates.successes[i] > 0) m.lm_mean_latency_s[i] = sum[i] / rates.successes[i];
  }
  return m;
}

std::vector<LedgerMetrics> epoch_series(std::span<const LedgerRow> rows, std::size_t lm_count, double tau,
                                        double lambda, double epoch_seconds, int epochs) {
  std::vector<std::vector<LedgerRow>> buckets(static_cast<std::size_t>(std::max(epochs, 0)));
  for (const auto& r : rows) {
    const auto e = static_cast<long>(std::floor(r.finish_s / epoch_seconds));
    if (e >= 0 && e < epochs) buckets[static_cast<std::size_t>(e)].push_back(r);
  }
  std::vector<LedgerMetrics> out;
  out.reserve(buckets.size());
  for (const auto& b : buckets) out.push_back(ledger_metrics(b, lm_count, tau, lambda));
  return out;
}

}  // namespace edgellm
