#include "edgellm/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "edgellm/macro_policy.hpp"

namespace edgellm {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::kTextToText:
      return "text-to-text";
    case Modality::kTextToImage:
      return "text-to-image";
    case Modality::kImageToText:
      return "image-to-text";
  }
  return "unknown";
}

std::optional<Modality> parse_modality(const std::string& s) {
  if (s == "text-to-text") return Modality::kTextToText;
  if (s == "text-to-image") return Modality::kTextToImage;
  if (s == "image-to-text") return Modality::kImageToText;
  return std::nullopt;
}

std::string to_string(const Placement& p) {
  switch (p.mode) {
    case Placement::Mode::kOff:
      return "off";
    case Placement::Mode::kCpu:
      return fmt::format("cpu:{}", p.units);
    case Placement::Mode::kGpu:
      return fmt::format("gpu:{}", p.units);
  }
  return "?";
}

int DeploymentAction::gpu_instances() const {
  return static_cast<int>(
      std::count_if(placements.begin(), placements.end(), [](const Placement& p) { return p.on_gpu(); }));
}

int DeploymentAction::active_count() const {
  return static_cast<int>(
      std::count_if(placements.begin(), placements.end(), [](const Placement& p) { return p.active(); }));
}

std::string to_string(const DeploymentAction& a) {
  std::string out = "[";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) out += ' ';
    out += to_string(a[i]);
  }
  return out + "]";
}

std::string to_string(PolicyName p) {
  switch (p) {
    case PolicyName::kMA:
      return "MA";
    case PolicyName::kRR:
      return "RR";
    case PolicyName::kRL:
      return "RL";
    case PolicyName::kMAL:
      return "MAL";
    case PolicyName::kAL:
      return "AL";
    case PolicyName::kRF:
      return "RF";
    case PolicyName::kLL:
      return "LL";
  }
  return "?";
}

std::optional<PolicyName> parse_policy_name(const std::string& s) {
  for (auto p : {PolicyName::kMA, PolicyName::kRR, PolicyName::kRL, PolicyName::kMAL, PolicyName::kAL,
                 PolicyName::kRF, PolicyName::kLL}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::string to_string(FailureReason r) {
  switch (r) {
    case FailureReason::kNone:
      return "none";
    case FailureReason::kDeadline:
      return "deadline";
    case FailureReason::kNeverDeployable:
      return "never-deployable";
  }
  return "?";
}

std::optional<NodeIndex> SimConfig::node_index(const std::string& id) const {
  for (NodeIndex n = 0; n < servers.size(); ++n) {
    if (servers[n].id == id) return n;
  }
  return std::nullopt;
}

std::optional<LmIndex> SimConfig::lm_index(int id) const {
  for (LmIndex i = 0; i < lms.size(); ++i) {
    if (lms[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<LmIndex> SimConfig::lm_index_by_name(const std::string& name) const {
  for (LmIndex i = 0; i < lms.size(); ++i) {
    if (lms[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<NodeIndex> SimConfig::inference_nodes() const {
  std::vector<NodeIndex> out;
  for (NodeIndex n = 0; n < servers.size(); ++n) {
    if (servers[n].hosts_inference) out.push_back(n);
  }
  return out;
}

void ResourceUse::add(const LmTypeSpec& lm, const Placement& p) {
  if (!p.active()) return;
  ram_gb += lm.deploy_ram_gb;
  if (p.on_gpu()) {
    vgpus += p.units;
    vram_gb += lm.min_vram_gb;
  } else {
    cores += p.units;
  }
}

bool ResourceUse::fits(const ServerSpec& node) const {
  // Small slack absorbs decimal RAM figures summed in binary.
  constexpr double kSlack = 1e-9;
  return vgpus <= node.vgpu_units && cores <= node.cpu_cores && ram_gb <= node.ram_gb + kSlack &&
         vram_gb <= node.vram_gb + kSlack;
}

bool is_feasible_node(const LmTypeSpec& lm, const ServerSpec& server) {
  if (!server.hosts_inference) return false;
  if (server.gpu_capable) return true;
  return lm.cpu_feasible && lm.deploy_ram_gb <= server.ram_gb;
}

std::vector<NodeIndex> feasible_nodes(const LmTypeSpec& lm, const std::vector<ServerSpec>& servers) {
  std::vector<NodeIndex> out;
  for (NodeIndex n = 0; n < servers.size(); ++n) {
    if (is_feasible_node(lm, servers[n])) out.push_back(n);
  }
  return out;
}

bool placement_allowed(const LmTypeSpec& lm, const ServerSpec& node, const Placement& p) {
  switch (p.mode) {
    case Placement::Mode::kOff:
      return true;
    case Placement::Mode::kCpu:
      return node.hosts_inference && lm.cpu_feasible && p.units >= 1;
    case Placement::Mode::kGpu:
      return node.hosts_inference && node.gpu_capable && p.units >= 1;
  }
  return false;
}

bool check_headroom(const ServerSpec& node, const DeploymentAction& action, const std::vector<LmTypeSpec>& lms) {
  ResourceUse use;
  for (LmIndex i = 0; i < action.size() && i < lms.size(); ++i) use.add(lms[i], action[i]);
  return use.fits(node);
}

namespace {

void check_lm(const LmTypeSpec& lm, std::size_t idx, std::vector<ConfigViolation>& out) {
  const std::string f = fmt::format("lms[{}]", idx);
  auto bad = [&](const std::string& field, const std::string& msg) { out.push_back({f + "." + field, msg}); };
  if (lm.min_ram_gb < 0) bad("min_ram_gb", "negative memory floor");
  if (lm.min_vram_gb <= 0) bad("min_vram_gb", "GPU-placeable model needs a positive vRAM floor");
  if (lm.deploy_ram_gb < lm.min_ram_gb) bad("deploy_ram_gb", "deploy RAM below minimum RAM");
  if (!(lm.gpu_base_seconds_per_prompt > 0) || !std::isfinite(lm.gpu_base_seconds_per_prompt)) {
    bad("gpu_base_seconds_per_prompt", "must be positive and finite");
  }
  if (lm.cpu_feasible) {
    if (!(lm.cpu_base_seconds_per_prompt > 0) || !std::isfinite(lm.cpu_base_seconds_per_prompt)) {
      bad("cpu_base_seconds_per_prompt", "must be positive and finite for a CPU-feasible model");
    }
  } else if (!std::isinf(lm.cpu_base_seconds_per_prompt)) {
    bad("cpu_base_seconds_per_prompt", "must be infinite for a CPU-infeasible model");
  }
  auto exponent_ok = [](double e) { return e > 0 && e <= 1; };
  if (!exponent_ok(lm.gpu_speedup_exponent)) bad("gpu_speedup_exponent", "must lie in (0, 1]");
  if (!exponent_ok(lm.cpu_speedup_exponent)) bad("cpu_speedup_exponent", "must lie in (0, 1]");
  if (lm.startup_seconds_gpu < 0) bad("startup_seconds_gpu", "negative delay");
  if (lm.startup_seconds_cpu < 0) bad("startup_seconds_cpu", "negative delay");
  if (lm.termination_seconds < 0) bad("termination_seconds", "negative delay");
  if (lm.prompt_bytes <= 0) bad("prompt_bytes", "must be positive");
  if (lm.result_bytes <= 0) bad("result_bytes", "must be positive");
}

void check_server(const ServerSpec& s, std::size_t idx, std::vector<ConfigViolation>& out) {
  const std::string f = fmt::format("servers[{}]", idx);
  if (s.cpu_cores < 0) out.push_back({f + ".cpu_cores", "negative capacity"});
  if (s.ram_gb < 0) out.push_back({f + ".ram_gb", "negative capacity"});
  if (s.vgpu_units < 0) out.push_back({f + ".vgpu_units", "negative capacity"});
  if (s.vram_gb < 0) out.push_back({f + ".vram_gb", "negative capacity"});
  const bool has_units = s.vgpu_units > 0;
  const bool has_vram = s.vram_gb > 0;
  if (s.gpu_capable != has_units || s.gpu_capable != has_vram) {
    out.push_back({f + ".gpu_capable", "gpu capability inconsistent"});
  }
  if (s.vgpu_units % 2 != 0) out.push_back({f + ".vgpu_units", "each physical GPU maps to 2 vGPU units"});
}

}  // namespace

std::vector<ConfigViolation> validate_config(const SimConfig& config) {
  std::vector<ConfigViolation> out;
  if (config.servers.empty()) out.push_back({"servers", "no servers declared"});
  if (config.lms.empty()) out.push_back({"lms", "no LM types declared"});

  std::set<std::string> server_ids;
  for (std::size_t n = 0; n < config.servers.size(); ++n) {
    if (!server_ids.insert(config.servers[n].id).second) {
      out.push_back({fmt::format("servers[{}].id", n), "duplicate node id " + config.servers[n].id});
    }
    check_server(config.servers[n], n, out);
  }
  std::set<int> lm_ids;
  std::set<std::string> lm_names;
  for (std::size_t i = 0; i < config.lms.size(); ++i) {
    if (!lm_ids.insert(config.lms[i].id).second) {
      out.push_back({fmt::format("lms[{}].id", i), fmt::format("duplicate LM id {}", config.lms[i].id)});
    }
    if (!lm_names.insert(config.lms[i].name).second) {
      out.push_back({fmt::format("lms[{}].name", i), "duplicate LM name " + config.lms[i].name});
    }
    check_lm(config.lms[i], i, out);
  }

  const std::size_t nodes = config.servers.size();
  const std::size_t types = config.lms.size();
  for (std::size_t l = 0; l < config.links.size(); ++l) {
    const auto& link = config.links[l];
    const std::string f = fmt::format("links[{}]", l);
    if (link.src >= nodes || link.dst >= nodes) out.push_back({f, "unresolved node id"});
    if (!(link.bandwidth_bytes_per_s > 0)) out.push_back({f + ".bandwidth_bytes_per_s", "must be positive"});
    if (link.rtt_seconds < 0) out.push_back({f + ".rtt_seconds", "negative delay"});
  }
  if (!(config.default_link.bandwidth_bytes_per_s > 0)) {
    out.push_back({"default_link.bandwidth_bytes_per_s", "must be positive"});
  }
  if (config.default_link.rtt_seconds < 0) out.push_back({"default_link.rtt_seconds", "negative delay"});

  if (!(config.slot_seconds > 0)) out.push_back({"slot_seconds", "must be positive"});
  if (config.slots_per_epoch < 1) out.push_back({"slots_per_epoch", "must be at least 1"});
  if (config.tau_seconds < config.slot_seconds) out.push_back({"tau_seconds", "must be at least slot_seconds"});
  if (config.lambda_weight < 0 || config.lambda_weight > 1) out.push_back({"lambda_weight", "must lie in [0, 1]"});

  const auto& w = config.workload;
  if (w.presence.size() != nodes) {
    out.push_back({"workload.presence", "needs one row per server"});
  } else {
    for (std::size_t n = 0; n < nodes; ++n) {
      const std::string f = fmt::format("workload.presence[{}]", n);
      if (w.presence[n].size() != types) {
        out.push_back({f, "needs one entry per LM type"});
        continue;
      }
      for (double p : w.presence[n]) {
        if (p < 0 || p > 1) out.push_back({f, "presence probability outside [0, 1]"});
        if (p > 0 && !config.servers[n].hosts_inference) {
          out.push_back({f, "control node cannot receive requests"});
        }
      }
    }
  }
  if (w.k_weights.size() != 9) {
    out.push_back({"workload.k_weights", "needs exactly 9 weights for k = 0..8"});
  } else {
    double sum = 0;
    for (double x : w.k_weights) {
      if (x < 0) out.push_back({"workload.k_weights", "negative weight"});
      sum += x;
    }
    if (!(sum > 0)) out.push_back({"workload.k_weights", "weights sum to zero"});
  }
  for (std::size_t e = 0; e < w.drift.size(); ++e) {
    const std::string f = fmt::format("workload.drift[{}]", e);
    if (w.drift[e].size() != types) out.push_back({f, "needs one multiplier per LM type"});
    for (double x : w.drift[e]) {
      if (x < 0) out.push_back({f, "negative multiplier"});
    }
  }

  const auto& d = config.dpp;
  if (!(d.v > 0)) out.push_back({"dpp.v", "must be positive"});
  if (d.alpha_cpu.size() != types) out.push_back({"dpp.alpha_cpu", "needs one weight per LM type"});
  if (d.alpha_gpu.size() != types) out.push_back({"dpp.alpha_gpu", "needs one weight per LM type"});
  for (double a : d.alpha_cpu) {
    if (a < 0) out.push_back({"dpp.alpha_cpu", "negative weight"});
  }
  for (double a : d.alpha_gpu) {
    if (a < 0) out.push_back({"dpp.alpha_gpu", "negative weight"});
  }
  if (d.p0 < 0 || d.p1 < 0 || d.p2 < 0) out.push_back({"dpp.p", "price coefficients must be nonnegative"});
  if (d.lambda_churn < 0) out.push_back({"dpp.lambda_churn", "must be nonnegative"});
  if (d.kappa < 0) out.push_back({"dpp.kappa", "must be nonnegative"});
  if (!(d.epsilon > 0 && d.epsilon < 1)) out.push_back({"dpp.epsilon", "must lie in (0, 1)"});
  if (d.cpu_grid.empty() || d.gpu_grid.empty()) out.push_back({"dpp.grid", "allocation grids must be nonempty"});
  for (int c : d.cpu_grid) {
    if (c < 1) out.push_back({"dpp.cpu_grid", "allocations must be positive"});
  }
  for (int g : d.gpu_grid) {
    if (g < 1) out.push_back({"dpp.gpu_grid", "allocations must be positive"});
  }

  if (config.agentic.overload_factor <= 0) out.push_back({"agentic.overload_factor", "must be positive"});
  if (config.agentic.retrieval_k < 1) out.push_back({"agentic.retrieval_k", "must be at least 1"});
  if (config.agentic.max_shift_per_epoch < 0 || config.agentic.max_shift_per_epoch > 1) {
    out.push_back({"agentic.max_shift_per_epoch", "must lie in [0, 1]"});
  }

  // The embedded policy check needs resolvable ids and sane LM specs.
  if (config.initial_policy && out.empty()) {
    for (auto& v : macro_policy_violations(*config.initial_policy, config)) {
      out.push_back({"initial_policy." + v.field, v.message});
    }
  }
  return out;
}

}  // namespace edgellm
