#include "edgellm/latency.hpp"

#include <cmath>

#include <fmt/format.h>

namespace edgellm {

double per_prompt_seconds(const LmTypeSpec& lm, const Placement& mode) {
  if (!mode.active() || mode.units < 1) {
    throw InfeasiblePlacement(fmt::format("{}: no compute allocated ({})", lm.name, to_string(mode)));
  }
  if (mode.on_cpu()) {
    if (!lm.cpu_feasible || !std::isfinite(lm.cpu_base_seconds_per_prompt)) {
      throw InfeasiblePlacement(fmt::format("{} cannot run on CPU", lm.name));
    }
    return lm.cpu_base_seconds_per_prompt / std::pow(static_cast<double>(mode.units), lm.cpu_speedup_exponent);
  }
  return lm.gpu_base_seconds_per_prompt / std::pow(static_cast<double>(mode.units), lm.gpu_speedup_exponent);
}

double inference_latency(const LmTypeSpec& lm, const Placement& mode, int k) {
  const double per_prompt = per_prompt_seconds(lm, mode);
  if (k <= 0) return 0.0;
  return static_cast<double>(k) * per_prompt;
}

double transmission_delay(const TopologyLink& link, std::int64_t bytes) {
  if (link.src == link.dst) return 0.0;
  return link.rtt_seconds + static_cast<double>(bytes) / link.bandwidth_bytes_per_s;
}

TopologyLink find_link(const SimConfig& config, NodeIndex src, NodeIndex dst) {
  if (src == dst) return {src, dst, config.default_link.bandwidth_bytes_per_s, 0.0};
  for (const auto& l : config.links) {
    if ((l.src == src && l.dst == dst) || (l.src == dst && l.dst == src)) {
      return {src, dst, l.bandwidth_bytes_per_s, l.rtt_seconds};
    }
  }
  if (config.default_link.full_mesh) {
    return {src, dst, config.default_link.bandwidth_bytes_per_s, config.default_link.rtt_seconds};
  }
  throw UnreachablePair(fmt::format("unreachable pair {} -> {}", src, dst));
}

double transfer_seconds(const SimConfig& config, NodeIndex src, NodeIndex dst, std::int64_t bytes) {
  return transmission_delay(find_link(config, src, dst), bytes);
}

double startup_delay(const LmTypeSpec& lm, const Placement& mode) {
  if (mode.on_gpu()) return lm.startup_seconds_gpu;
  if (mode.on_cpu()) return lm.startup_seconds_cpu;
  return 0.0;
}

double termination_delay(const LmTypeSpec& lm) { return lm.termination_seconds; }

}  // namespace edgellm
