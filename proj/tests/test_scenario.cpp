#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "edgellm/macro_policy.hpp"
#include "edgellm/scenario.hpp"

using namespace edgellm;

TEST_SUITE("scenario") {
  TEST_CASE("round trip through JSON") {
    const SimConfig c = default_scenario_config();
    const std::string text = scenario_to_json(c);
    const auto back = parse_scenario(text);
    REQUIRE(back.config);
    CHECK(scenario_to_json(*back.config) == text);
    CHECK(back.config->dpp == c.dpp);
    CHECK(std::isinf(back.config->lms[3].cpu_base_seconds_per_prompt));
  }

  TEST_CASE("shipped scenarios load") {
    const auto a = load_scenario(std::string(EDGELLM_SCENARIO_DIR) + "/paper_default.json");
    REQUIRE(a.config);
    CHECK(scenario_to_json(*a.config) == scenario_to_json(default_scenario_config()));
    const auto b = load_scenario(std::string(EDGELLM_SCENARIO_DIR) + "/misrouted_start");
    REQUIRE(b.config);
    REQUIRE(b.config->initial_policy);
    CHECK(macro_policy_violations(*b.config->initial_policy, *b.config).empty());
  }

  TEST_CASE("invalid documents report violations") {
    CHECK(parse_scenario("{not json").violations.size() == 1);
    std::string text = scenario_to_json(default_scenario_config());
    const auto pos = text.find("\"tau_seconds\": 900.0");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 20, "\"tau_seconds\": 1.0");
    const auto bad = parse_scenario(text);
    CHECK_FALSE(bad.config);
    CHECK_FALSE(bad.violations.empty());
  }

  TEST_CASE("missing file is an I/O error") {
    const auto r = load_scenario("/nonexistent/scenario.json");
    CHECK(r.io_error);
    CHECK_FALSE(r.config);
  }

  TEST_CASE("dpp parameter documents round trip") {
    SimConfig c = default_scenario_config();
    DppParams p = c.dpp;
    p.p1 = 0.31;
    p.kappa = 0.9;
    const std::string doc = dpp_params_to_json(p, c);
    CHECK(apply_dpp_params(doc, c).empty());
    CHECK(c.dpp == p);
  }
}
