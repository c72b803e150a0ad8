#pragma once

// Hand-crafted planner answers that must never reach the engine. They target
// a variant of the default scenario where vm3 has only 12 GB of RAM, so a few
// role sets exceed a node's capacity at minimum allocations.

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "edgellm/macro_policy.hpp"
#include "edgellm/scenario.hpp"

namespace edgellm::testing {

inline SimConfig crafting_config() {
  SimConfig c = default_scenario_config();
  c.servers[*c.node_index("vm3")].ram_gb = 12.0;
  return c;
}

struct CraftedAnswer {
  std::string name;
  std::string text;
};

inline std::vector<CraftedAnswer> crafted_invalid_answers(const SimConfig& c) {
  using nlohmann::json;
  const json base = json::parse(macro_policy_to_json(random_baseline_policy(c), c));
  auto edit = [&](auto&& fn) {
    json j = base;
    fn(j);
    return j.dump();
  };
  const char* rp = "routing_probabilities";
  const char* roles = "node_role_intent";
  std::vector<CraftedAnswer> out;
  out.push_back({"empty text", ""});
  out.push_back({"prose", "Route everything to vm7, it has the most GPUs."});
  out.push_back({"truncated json", base.dump().substr(0, 40)});
  out.push_back({"array instead of object", "[]"});
  out.push_back({"trailing prose", base.dump() + " hope this helps"});
  out.push_back({"missing role block", edit([&](json& j) { j.erase(roles); })});
  out.push_back({"routing as array", edit([&](json& j) { j[rp] = json::array({0.5, 0.5}); })});
  out.push_back({"unknown lm", edit([&](json& j) { j[rp]["LM9"] = j[rp]["LM1"]; })});
  out.push_back({"unknown node", edit([&](json& j) { j[rp]["LM1"]["vm99"] = 0.0; })});
  out.push_back({"row sums to one half", edit([&](json& j) {
                   for (auto& [node, p] : j[rp]["LM1"].items()) p = p.get<double>() / 2;
                 })});
  out.push_back({"row sums above one", edit([&](json& j) {
                   for (auto& [node, p] : j[rp]["LM2"].items()) p = p.get<double>() * 1.5;
                 })});
  out.push_back({"negative probability", edit([&](json& j) {
                   j[rp]["LM3"] = json::object();
                   j[rp]["LM3"]["vm2"] = -0.25;
                   j[rp]["LM3"]["vm3"] = 1.25;
                 })});
  out.push_back({"gpu-only lm on cpu-only node", edit([&](json& j) {
                   j[rp]["LM4"] = json::object();
                   j[rp]["LM4"]["vm2"] = 0.2;
                   j[rp]["LM4"]["vm7"] = 0.8;
                 })});
  out.push_back({"mass on control node", edit([&](json& j) {
                   j[rp]["LM1"] = json::object();
                   j[rp]["LM1"]["vm1"] = 0.5;
                   j[rp]["LM1"]["vm2"] = 0.5;
                 })});
  out.push_back({"lm row missing", edit([&](json& j) { j[rp].erase("LM3"); })});
  out.push_back({"probability as string", edit([&](json& j) { j[rp]["LM1"]["vm2"] = "0.2"; })});
  out.push_back({"gpu-only role on cpu-only node", edit([&](json& j) { j[roles]["vm2"] = json::array({"LM4"}); })});
  out.push_back({"role on control node", edit([&](json& j) { j[roles]["vm1"] = json::array({"LM1"}); })});
  out.push_back({"roles over capacity", edit([&](json& j) {
                   j[roles]["vm3"] = json::array({"LM1", "LM2", "LM3", "LM4"});
                 })});
  out.push_back({"unknown role lm", edit([&](json& j) { j[roles]["vm4"] = json::array({"LM7"}); })});
  return out;
}

}  // namespace edgellm::testing
