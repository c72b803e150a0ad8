#pragma once

// Small hand-built scenarios and generators shared by the test suites.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "edgellm/engine.hpp"
#include "edgellm/model.hpp"

namespace edgellm::testing {

inline LmTypeSpec make_lm(int id, double gpu_s, double cpu_s, bool cpu_ok = true) {
  LmTypeSpec s;
  s.id = id;
  s.name = "LM" + std::to_string(id);
  s.min_ram_gb = 1.0;
  s.min_vram_gb = 2.0;
  s.deploy_ram_gb = 1.0;
  s.cpu_feasible = cpu_ok;
  s.gpu_base_seconds_per_prompt = gpu_s;
  s.cpu_base_seconds_per_prompt = cpu_ok ? cpu_s : kInfinity;
  s.gpu_speedup_exponent = 1.0;
  s.cpu_speedup_exponent = 1.0;
  s.startup_seconds_gpu = 20.0;
  s.startup_seconds_cpu = 10.0;
  s.termination_seconds = 10.0;
  s.prompt_bytes = 1;
  s.result_bytes = 1;
  return s;
}

inline ServerSpec make_server(const std::string& id, int cores, double ram, int vgpus, double vram) {
  return {id, cores, ram, vgpus, vram, vgpus > 0, true};
}

// One worker node with zero-cost links; presence defaults to zero so tests
// drive arrivals by hand.
inline SimConfig single_node_config(std::vector<LmTypeSpec> lms, ServerSpec node = make_server("n0", 16, 32, 2, 24)) {
  SimConfig c;
  c.servers = {node};
  c.lms = std::move(lms);
  c.default_link = {1e12, 0.0, true};
  c.workload.presence.assign(1, std::vector<double>(c.lms.size(), 0.0));
  c.dpp.alpha_cpu.assign(c.lms.size(), 1.0);
  c.dpp.alpha_gpu.assign(c.lms.size(), 1.0);
  return c;
}

inline Request make_request(std::uint64_t id, LmIndex lm, int k, double arrival = 0.0, NodeIndex origin = 0) {
  Request r;
  r.request_id = id;
  r.lm = lm;
  r.origin = origin;
  r.k_prompts = k;
  r.arrival_time = arrival;
  return r;
}

// Router/deployer stubs for engine tests.
class FixedRouter : public Router {
 public:
  RoutingMatrix route(const WorldView& world, Rng&) override {
    RoutingMatrix m(world.nodes.size(), world.config->lms.size());
    for (NodeIndex n = 0; n < world.nodes.size(); ++n) {
      for (LmIndex i = 0; i < world.config->lms.size(); ++i) m.dest[n][i] = n;
    }
    return m;
  }
};

class HoldDeployer : public Deployer {
 public:
  explicit HoldDeployer(DeploymentAction a) : action_(std::move(a)) {}
  DeploymentAction decide(const NodeSnapshot&, const WorldView&, Rng&) override { return action_; }

 private:
  DeploymentAction action_;
};

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

}  // namespace edgellm::testing
