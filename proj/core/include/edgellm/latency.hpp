#pragma once

// Parametric latency components: inference, network transfer, and replica
// lifecycle delays.

#include <cstdint>
#include <stdexcept>

#include "edgellm/model.hpp"

namespace edgellm {

class InfeasiblePlacement : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnreachablePair : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seconds to run one prompt: base / units^exponent for the placement's mode.
double per_prompt_seconds(const LmTypeSpec& lm, const Placement& mode);

// k * per_prompt_seconds. Throws InfeasiblePlacement for Off, for units < 1,
// or for CPU placement of a CPU-infeasible LM.
double inference_latency(const LmTypeSpec& lm, const Placement& mode, int k);

// rtt + bytes / bandwidth; zero on a self-link.
double transmission_delay(const TopologyLink& link, std::int64_t bytes);

// Link lookup over explicit overrides (either direction) falling back to the
// default full mesh. Throws UnreachablePair when both are absent.
TopologyLink find_link(const SimConfig& config, NodeIndex src, NodeIndex dst);
double transfer_seconds(const SimConfig& config, NodeIndex src, NodeIndex dst, std::int64_t bytes);

double startup_delay(const LmTypeSpec& lm, const Placement& mode);
double termination_delay(const LmTypeSpec& lm);

}  // namespace edgellm
