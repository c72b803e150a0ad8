#pragma once

// Lyapunov drift-plus-penalty deployment control.
//
// score(a) = sum_i Q_i * mu_i(a) - V * C(a)
// mu_i     = alpha_cpu_i * f(eta_cpu) * f(eta_mem)   (CPU placement)
//          = alpha_gpu_i * f(eta_gpu)                (GPU placement)
// f(x)     = eps + (1 - eps) * x
// C(a)     = price * N_gpu(a) + lambda_churn * sum_i [a_i != prev_i] * (1 + kappa * Q_i)
// price    = p0 + p1 * (1 - eta_gpu) + p2 * phi_img
//
// The eta values in mu are residual fractions after the candidate action;
// the price uses the node's committed GPU usage before the action. Any
// placement change counts toward churn: switching mode or size redeploys the
// replica just like a stop followed by a start.

#include <iosfwd>
#include <vector>

#include "edgellm/engine.hpp"
#include "edgellm/model.hpp"

namespace edgellm {

inline constexpr double kDppTieTolerance = 1e-9;

// Full cross-product of per-LM {Off, Cpu(grid), Gpu(grid)} that passes the
// placement rules and the node budget. Ordered lexicographically by LM id.
std::vector<DeploymentAction> enumerate_actions(const ServerSpec& node, const SimConfig& config);

// enumerate_actions restricted by the transient-state rule: while any replica
// is Pending or Starting, no LM may be started or resized and transient LMs
// may not change at all. The current configuration is always included.
std::vector<DeploymentAction> dpp_feasible_actions(const ServerSpec& node, const NodeSnapshot& snapshot,
                                                   const SimConfig& config);
std::vector<DeploymentAction> filter_transient(const std::vector<DeploymentAction>& all,
                                               const NodeSnapshot& snapshot);

double smoothing(double x, double epsilon);

struct Residuals {
  double cpu = 1.0;
  double mem = 1.0;
  double gpu = 1.0;
};

Residuals residuals_after(const ServerSpec& node, const DeploymentAction& action, const SimConfig& config);

std::vector<double> dpp_service_proxy(const ServerSpec& node, const DeploymentAction& action, const DppParams& params,
                                      const SimConfig& config);

double gpu_price(double eta_gpu, double image_share, const DppParams& params);
// Price from the node's committed GPU usage and image backlog share.
double dpp_gpu_price(const ServerSpec& node, const NodeSnapshot& snapshot, const DppParams& params);

double churn_cost(const DeploymentAction& action, const DeploymentAction& prev, const std::vector<double>& queues,
                  const DppParams& params);
double dpp_cost(double price, const DeploymentAction& action, const DeploymentAction& prev,
                const std::vector<double>& queues, const DppParams& params);

struct DppScore {
  DeploymentAction action;
  double service = 0.0;  // sum_i Q_i * mu_i
  double price = 0.0;
  double churn = 0.0;
  double cost = 0.0;
  double score = 0.0;
};

DppScore dpp_score(const ServerSpec& node, const DeploymentAction& action, const DeploymentAction& prev,
                   const std::vector<double>& queues, double price, const DppParams& params, const SimConfig& config);

// True iff `a` should be preferred over `b`: higher score beyond the
// tolerance, then fewer GPU replicas, lower churn, and finally the
// lexicographically smaller action.
bool dpp_prefers(const DppScore& a, const DppScore& b);

// Argmax over `candidates`; an empty candidate list keeps `snapshot.current`.
DppScore dpp_select(const ServerSpec& node, const NodeSnapshot& snapshot, const std::vector<double>& queues,
                    const DppParams& params, const SimConfig& config,
                    const std::vector<DeploymentAction>& candidates);
DppScore dpp_select(const ServerSpec& node, const NodeSnapshot& snapshot, const std::vector<double>& queues,
                    const DppParams& params, const SimConfig& config);

struct CalibrationStep {
  int iteration = 0;
  DppParams params;
  double mean_latency_s = 0.0;
  double gpu_headroom = 0.0;
  double flip_rate = 0.0;  // placement changes per node-slot
};

struct CalibrationOptions {
  int iterations = 0;
  double step = 0.02;
  int slots_per_episode = 50;
  double flip_threshold = 0.05;
  double headroom_threshold = 0.5;
  std::uint64_t seed = 1;
};

struct CalibrationResult {
  DppParams params;
  std::vector<CalibrationStep> trajectory;
};

// One randomized-routing episode under DPP deployment with `params`.
CalibrationStep run_calibration_episode(const SimConfig& config, const DppParams& params, int slots,
                                        std::uint64_t seed);

CalibrationResult calibrate_dpp(const SimConfig& config, const CalibrationOptions& options);
void write_calibration_csv(std::ostream& out, const std::vector<CalibrationStep>& trajectory);

}  // namespace edgellm
