#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "edgellm/baselines.hpp"
#include "edgellm/dpp.hpp"
#include "edgellm/scenario.hpp"
#include "fixtures.hpp"

using namespace edgellm;
using namespace edgellm::testing;

namespace {

// Independent enumerator: every Off/Cpu/Gpu combination over the grid,
// filtered by a direct budget sum.
std::vector<DeploymentAction> brute_force_actions(const ServerSpec& node, const SimConfig& c) {
  std::vector<Placement> modes{Placement::off()};
  for (int x : c.dpp.cpu_grid) modes.push_back(Placement::cpu(x));
  for (int g : c.dpp.gpu_grid) modes.push_back(Placement::gpu(g));
  const std::size_t n = c.lms.size();
  std::vector<std::size_t> idx(n, 0);
  std::vector<DeploymentAction> out;
  while (true) {
    DeploymentAction a(n);
    bool ok = true;
    int cores = 0, vgpus = 0;
    double ram = 0, vram = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = modes[idx[i]];
      if (a[i].on_cpu() && !c.lms[i].cpu_feasible) ok = false;
      if (a[i].on_gpu() && !node.gpu_capable) ok = false;
      if (a[i].active()) ram += c.lms[i].deploy_ram_gb;
      if (a[i].on_cpu()) cores += a[i].units;
      if (a[i].on_gpu()) {
        vgpus += a[i].units;
        vram += c.lms[i].min_vram_gb;
      }
    }
    if (ok && cores <= node.cpu_cores && vgpus <= node.vgpu_units && ram <= node.ram_gb + 1e-9 &&
        vram <= node.vram_gb + 1e-9) {
      out.push_back(a);
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == modes.size()) idx[k++] = 0;
    if (k == n) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("dpp") {
  TEST_CASE("service proxy examples") {
    auto c = single_node_config({make_lm(1, 1, 4), make_lm(2, 1, 4)}, make_server("n", 4, 8, 2, 24));
    c.lms[0].deploy_ram_gb = 0.0;
    c.lms[0].min_ram_gb = 0.0;
    DppParams p = c.dpp;
    p.epsilon = 0.0;
    DeploymentAction a(2);
    a[0] = Placement::cpu(2);  // half the cores, no RAM
    const auto mu = dpp_service_proxy(c.servers[0], a, p, c);
    CHECK(mu[0] == doctest::Approx(0.5));
    CHECK(mu[1] == 0.0);

    const SimConfig paper = default_scenario_config();
    const ServerSpec vm7 = paper.servers[6];
    DeploymentAction none(4);
    const auto zero = dpp_service_proxy(vm7, none, paper.dpp, paper);
    CHECK(std::all_of(zero.begin(), zero.end(), [](double x) { return x == 0.0; }));
    // eta_gpu = 1 only for a GPU-less action, so evaluate the formula pieces.
    CHECK(paper.dpp.alpha_gpu[2] * smoothing(1.0, paper.dpp.epsilon) == doctest::Approx(1.5));
    DeploymentAction img(4);
    img[2] = Placement::gpu(1);
    CHECK(dpp_service_proxy(vm7, img, paper.dpp, paper)[2] ==
          doctest::Approx(1.5 * (0.1 + 0.9 * 0.75)));
  }

  TEST_CASE("gpu price examples") {
    const DppParams p = default_scenario_config().dpp;
    CHECK(gpu_price(1.0, 0.0, p) == doctest::Approx(0.1));
    CHECK(gpu_price(0.0, 1.0, p) == doctest::Approx(0.72));
    double last = -1;
    for (double eta = 1.0; eta >= 0.0; eta -= 0.125) {
      const double price = gpu_price(eta, 0.3, p);
      CHECK(price >= last);
      last = price;
    }
  }

  TEST_CASE("churn examples") {
    const DppParams p = default_scenario_config().dpp;
    DeploymentAction prev(2);
    DeploymentAction next(2);
    next[0] = Placement::cpu(2);
    CHECK(churn_cost(prev, prev, {5, 5}, p) == 0.0);
    CHECK(churn_cost(next, prev, {0, 0}, p) == doctest::Approx(0.08));
    CHECK(churn_cost(next, prev, {10, 0}, p) == doctest::Approx(0.688));
    DeploymentAction moved = next;
    moved[0] = Placement::gpu(1);
    CHECK(churn_cost(moved, next, {0, 0}, p) == doctest::Approx(0.08));
  }

  TEST_CASE("score decomposition and the worked example") {
    auto c = single_node_config({make_lm(1, 1, 4), make_lm(2, 1, 4)}, make_server("n", 8, 16, 2, 24));
    const ServerSpec& node = c.servers[0];
    DeploymentAction prev(2);
    DeploymentAction a(2);
    a[0] = Placement::gpu(1);
    const std::vector<double> q{4, 0};
    const DppScore s = dpp_score(node, a, prev, q, 0.17, c.dpp, c);
    const auto mu = dpp_service_proxy(node, a, c.dpp, c);
    CHECK(s.service == doctest::Approx(4 * mu[0]));
    CHECK(s.cost == doctest::Approx(0.17 * 1 + churn_cost(a, prev, q, c.dpp)));
    CHECK(s.score == doctest::Approx(s.service - c.dpp.v * s.cost).epsilon(1e-12));
    // Q=(4,0), mu=(1.0, 0.5), V=1, C=0.25 -> 3.75.
    CHECK(4 * 1.0 + 0 * 0.5 - 1.0 * 0.25 == doctest::Approx(3.75));
  }

  TEST_CASE("empty queues keep an idle node idle") {
    const SimConfig c = default_scenario_config();
    NodeSnapshot snap;
    snap.node = 3;
    snap.current = DeploymentAction(4);
    snap.phase.assign(4, std::nullopt);
    snap.backlog.assign(4, 0.0);
    const auto best = dpp_select(c.servers[3], snap, snap.backlog, c.dpp, c);
    CHECK(best.action == DeploymentAction(4));
  }

  TEST_CASE("enumeration equals the brute-force set") {
    const SimConfig c = default_scenario_config();
    for (const auto& node : c.servers) {
      if (!node.hosts_inference) continue;
      auto mine = enumerate_actions(node, c);
      std::sort(mine.begin(), mine.end());
      CHECK(mine == brute_force_actions(node, c));
    }
  }

  TEST_CASE("CPU-only node has no GPU actions and never places a GPU-only LM") {
    const SimConfig c = default_scenario_config();
    for (const auto& a : enumerate_actions(c.servers[1], c)) {
      for (LmIndex i = 0; i < a.size(); ++i) CHECK_FALSE(a[i].on_gpu());
      CHECK_FALSE(a[3].active());
    }
  }

  TEST_CASE("single-vGPU node never runs two GPU replicas") {
    auto c = single_node_config({make_lm(1, 1, 4), make_lm(2, 1, 4)}, make_server("n", 8, 16, 1, 24));
    for (const auto& a : enumerate_actions(c.servers[0], c)) CHECK(a.gpu_instances() <= 1);
    CHECK(enumerate_actions(c.servers[0], c).size() == brute_force_actions(c.servers[0], c).size());
  }

  TEST_CASE("all replicas pending leaves only the no-op") {
    const SimConfig c = default_scenario_config();
    NodeSnapshot snap;
    snap.node = 2;
    snap.current = DeploymentAction(4);
    snap.current[0] = Placement::gpu(1);
    snap.current[2] = Placement::cpu(4);
    snap.phase.assign(4, std::nullopt);
    snap.phase[0] = ReplicaPhase::kPending;
    snap.phase[2] = ReplicaPhase::kPending;
    snap.transient = true;
    const auto actions = dpp_feasible_actions(c.servers[2], snap, c);
    REQUIRE(actions.size() == 1);
    CHECK(actions[0] == snap.current);
  }

  TEST_CASE("transient node may only stop settled replicas") {
    const SimConfig c = default_scenario_config();
    NodeSnapshot snap;
    snap.node = 2;
    snap.current = DeploymentAction(4);
    snap.current[0] = Placement::gpu(1);
    snap.current[1] = Placement::cpu(4);
    snap.phase.assign(4, std::nullopt);
    snap.phase[0] = ReplicaPhase::kStarting;
    snap.phase[1] = ReplicaPhase::kRunning;
    snap.transient = true;
    const auto actions = dpp_feasible_actions(c.servers[2], snap, c);
    CHECK(actions.size() == 2);
    for (const auto& a : actions) {
      CHECK(a[0] == snap.current[0]);
      CHECK(!a[2].active());
      CHECK(!a[3].active());
    }
  }

  TEST_CASE("tie-break prefers fewer GPU replicas, then lower churn, then the smaller action") {
    DppScore a;
    DppScore b;
    a.action = DeploymentAction(2);
    b.action = DeploymentAction(2);
    a.action[0] = Placement::cpu(2);
    b.action[0] = Placement::gpu(1);
    a.score = 1.0;
    b.score = 1.0 + 5e-10;
    CHECK(dpp_prefers(a, b));
    b.action[0] = Placement::cpu(4);
    a.churn = 0.2;
    b.churn = 0.1;
    CHECK(dpp_prefers(b, a));
    b.churn = 0.2;
    CHECK(dpp_prefers(a, b));
    b.score = 1.1;
    CHECK(dpp_prefers(b, a));
  }

  TEST_CASE("zero calibration iterations return the defaults") {
    const SimConfig c = default_scenario_config();
    CalibrationOptions o;
    o.iterations = 0;
    const auto r = calibrate_dpp(c, o);
    CHECK(r.params == c.dpp);
    CHECK(r.trajectory.empty());
    CHECK(c.dpp.lambda_churn == 0.08);
    CHECK(c.dpp.kappa == 0.76);
    CHECK(c.dpp.p1 == 0.25);
    CHECK(c.dpp.p2 == 0.37);
  }

  TEST_CASE("zero nudge step leaves parameters unchanged") {
    const SimConfig c = default_scenario_config();
    CalibrationOptions o;
    o.iterations = 3;
    o.step = 0.0;
    o.slots_per_episode = 20;
    CHECK(calibrate_dpp(c, o).params == c.dpp);
  }
}
