#pragma once

// Scenario files: a JSON key/value tree whose keys mirror SimConfig fields.
// LM latency parameters live under a top-level "latency" section keyed by LM
// name; an infinite CPU base time is written as null.

#include <string>
#include <vector>

#include "edgellm/model.hpp"

namespace edgellm {

struct ScenarioLoad {
  std::optional<SimConfig> config;
  std::vector<ConfigViolation> violations;
  bool io_error = false;
};

// Accepts `path` as given or with a ".json" suffix appended.
ScenarioLoad load_scenario(const std::string& path);
ScenarioLoad parse_scenario(const std::string& text);
std::string scenario_to_json(const SimConfig& config);

std::string dpp_params_to_json(const DppParams& params, const SimConfig& config);
// Applies a DppParams document (either bare or under a "dpp" key) onto config.
std::vector<ConfigViolation> apply_dpp_params(const std::string& text, SimConfig& config);

// Seven-node testbed: one control node, one CPU-only worker, four single-GPU
// workers and one dual-GPU worker; four LM types.
SimConfig default_scenario_config();

// Scales every presence probability by `factor`, clamped to [0, 1].
void scale_presence(SimConfig& config, double factor);

}  // namespace edgellm
