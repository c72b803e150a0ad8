#include <doctest.h>

#include "edgellm/model.hpp"
#include "edgellm/scenario.hpp"
#include "fixtures.hpp"

using namespace edgellm;
using namespace edgellm::testing;

TEST_SUITE("model") {
  TEST_CASE("default scenario validates") {
    const SimConfig c = default_scenario_config();
    CHECK(validate_config(c).empty());
    CHECK(c.servers.size() == 7);
    CHECK(c.lms.size() == 4);
    CHECK(c.inference_nodes().size() == 6);
    int vgpus = 0;
    for (const auto& s : c.servers) vgpus += s.vgpu_units;
    CHECK(vgpus == 12);
  }

  TEST_CASE("feasible nodes exclude the control node and GPU-only types on CPU-only nodes") {
    const SimConfig c = default_scenario_config();
    const auto lm4 = feasible_nodes(c.lms[3], c.servers);
    CHECK(lm4 == std::vector<NodeIndex>{2, 3, 4, 5, 6});
    const auto lm1 = feasible_nodes(c.lms[0], c.servers);
    CHECK(lm1 == std::vector<NodeIndex>{1, 2, 3, 4, 5, 6});
  }

  TEST_CASE("headroom counts every resource") {
    auto c = single_node_config({make_lm(1, 1, 4), make_lm(2, 1, 4)}, make_server("n", 8, 4, 2, 3));
    DeploymentAction a(2);
    a[0] = Placement::gpu(1);
    CHECK(check_headroom(c.servers[0], a, c.lms));
    a[1] = Placement::gpu(1);
    CHECK_FALSE(check_headroom(c.servers[0], a, c.lms));  // vRAM 4 > 3
    a[1] = Placement::cpu(8);
    CHECK(check_headroom(c.servers[0], a, c.lms));
    a[0] = Placement::cpu(2);
    CHECK_FALSE(check_headroom(c.servers[0], a, c.lms));  // 10 cores
  }

  TEST_CASE("placement rules") {
    const SimConfig c = default_scenario_config();
    CHECK_FALSE(placement_allowed(c.lms[3], c.servers[2], Placement::cpu(2)));
    CHECK(placement_allowed(c.lms[3], c.servers[2], Placement::gpu(1)));
    CHECK_FALSE(placement_allowed(c.lms[0], c.servers[1], Placement::gpu(1)));
    CHECK_FALSE(placement_allowed(c.lms[0], c.servers[0], Placement::cpu(2)));
  }

  TEST_CASE("action ordering follows the placement order") {
    CHECK(Placement::off() < Placement::cpu(2));
    CHECK(Placement::cpu(2) < Placement::cpu(8));
    CHECK(Placement::cpu(8) < Placement::gpu(1));
    CHECK(Placement::gpu(1) < Placement::gpu(2));
  }

  TEST_CASE("violations name the field") {
    SimConfig c = default_scenario_config();
    c.tau_seconds = 10;
    c.workload.presence[0][0] = 0.5;
    c.lms[1].name = "LM1";
    const auto v = validate_config(c);
    auto has = [&](const std::string& field) {
      for (const auto& x : v) {
        if (x.field.find(field) != std::string::npos) return true;
      }
      return false;
    };
    CHECK(has("tau_seconds"));
    CHECK(has("presence"));
    CHECK(has("name"));
  }

  TEST_CASE("policy names parse") {
    for (const char* n : {"MA", "RR", "RL", "MAL", "AL", "RF", "LL"}) {
      const auto p = parse_policy_name(n);
      REQUIRE(p);
      CHECK(to_string(*p) == n);
    }
    CHECK_FALSE(parse_policy_name("XX"));
  }
}
