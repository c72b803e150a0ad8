#include "edgellm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "edgellm/macro_policy.hpp"
#include <nlohmann/json.hpp>

namespace edgellm {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

struct Reader {
  std::vector<ConfigViolation>& errors;

  template <typename T>
  void get(const json& obj, const char* key, T& out, const std::string& path) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      errors.push_back({path + "." + key, "wrong type"});
    }
  }

  void get_seconds(const json& obj, const char* key, double& out, const std::string& path) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (v.is_null() || (v.is_string() && v.get<std::string>() == "inf")) {
      out = kInfinity;
    } else if (v.is_number()) {
      out = v.get<double>();
    } else {
      errors.push_back({path + "." + key, "wrong type"});
    }
  }
};

void read_servers(const json& doc, SimConfig& c, Reader& r) {
  if (!doc.contains("servers") || !doc["servers"].is_array()) {
    r.errors.push_back({"servers", "missing server list"});
    return;
  }
  for (std::size_t n = 0; n < doc["servers"].size(); ++n) {
    const auto& s = doc["servers"][n];
    const std::string path = fmt::format("servers[{}]", n);
    ServerSpec spec;
    r.get(s, "id", spec.id, path);
    r.get(s, "cpu_cores", spec.cpu_cores, path);
    r.get(s, "ram_gb", spec.ram_gb, path);
    r.get(s, "vgpu_units", spec.vgpu_units, path);
    r.get(s, "vram_gb", spec.vram_gb, path);
    r.get(s, "gpu_capable", spec.gpu_capable, path);
    r.get(s, "hosts_inference", spec.hosts_inference, path);
    c.servers.push_back(spec);
  }
}

void read_lms(const json& doc, SimConfig& c, Reader& r) {
  if (!doc.contains("lms") || !doc["lms"].is_array()) {
    r.errors.push_back({"lms", "missing LM list"});
    return;
  }
  for (std::size_t i = 0; i < doc["lms"].size(); ++i) {
    const auto& l = doc["lms"][i];
    const std::string path = fmt::format("lms[{}]", i);
    LmTypeSpec lm;
    r.get(l, "id", lm.id, path);
    r.get(l, "name", lm.name, path);
    std::string modality = "text-to-text";
    r.get(l, "modality", modality, path);
    if (auto m = parse_modality(modality)) {
      lm.modality = *m;
    } else {
      r.errors.push_back({path + ".modality", "unknown modality " + modality});
    }
    r.get(l, "min_ram_gb", lm.min_ram_gb, path);
    r.get(l, "min_vram_gb", lm.min_vram_gb, path);
    r.get(l, "deploy_ram_gb", lm.deploy_ram_gb, path);
    r.get(l, "storage_gb", lm.storage_gb, path);
    r.get(l, "cpu_feasible", lm.cpu_feasible, path);
    r.get(l, "prompt_bytes", lm.prompt_bytes, path);
    r.get(l, "result_bytes", lm.result_bytes, path);
    if (lm.name.empty()) lm.name = fmt::format("LM{}", lm.id);
    c.lms.push_back(lm);
  }
  if (!doc.contains("latency")) return;
  const auto& lat = doc["latency"];
  if (!lat.is_object()) {
    r.errors.push_back({"latency", "must be an object keyed by LM name"});
    return;
  }
  for (const auto& [name, p] : lat.items()) {
    auto idx = c.lm_index_by_name(name);
    if (!idx) {
      r.errors.push_back({"latency." + name, "unresolved LM"});
      continue;
    }
    auto& lm = c.lms[*idx];
    const std::string path = "latency." + name;
    r.get_seconds(p, "gpu_base_seconds_per_prompt", lm.gpu_base_seconds_per_prompt, path);
    r.get_seconds(p, "cpu_base_seconds_per_prompt", lm.cpu_base_seconds_per_prompt, path);
    r.get(p, "gpu_speedup_exponent", lm.gpu_speedup_exponent, path);
    r.get(p, "cpu_speedup_exponent", lm.cpu_speedup_exponent, path);
    r.get(p, "startup_seconds_gpu", lm.startup_seconds_gpu, path);
    r.get(p, "startup_seconds_cpu", lm.startup_seconds_cpu, path);
    r.get(p, "termination_seconds", lm.termination_seconds, path);
  }
}

void read_links(const json& doc, SimConfig& c, Reader& r) {
  if (doc.contains("default_link")) {
    r.get(doc["default_link"], "bandwidth_bytes_per_s", c.default_link.bandwidth_bytes_per_s, "default_link");
    r.get(doc["default_link"], "rtt_seconds", c.default_link.rtt_seconds, "default_link");
    r.get(doc["default_link"], "full_mesh", c.default_link.full_mesh, "default_link");
  }
  if (!doc.contains("links")) return;
  for (std::size_t l = 0; l < doc["links"].size(); ++l) {
    const auto& j = doc["links"][l];
    const std::string path = fmt::format("links[{}]", l);
    std::string src, dst;
    r.get(j, "src", src, path);
    r.get(j, "dst", dst, path);
    auto s = c.node_index(src);
    auto d = c.node_index(dst);
    if (!s || !d) {
      r.errors.push_back({path, "unresolved node id"});
      continue;
    }
    TopologyLink link{*s, *d, c.default_link.bandwidth_bytes_per_s, c.default_link.rtt_seconds};
    r.get(j, "bandwidth_bytes_per_s", link.bandwidth_bytes_per_s, path);
    r.get(j, "rtt_seconds", link.rtt_seconds, path);
    c.links.push_back(link);
  }
}

void read_workload(const json& doc, SimConfig& c, Reader& r) {
  auto& w = c.workload;
  w.presence.assign(c.servers.size(), std::vector<double>(c.lms.size(), 0.0));
  if (!doc.contains("workload")) return;
  const auto& wl = doc["workload"];
  if (wl.contains("presence")) {
    for (const auto& [node, row] : wl["presence"].items()) {
      auto n = c.node_index(node);
      if (!n) {
        r.errors.push_back({"workload.presence." + node, "unresolved node id"});
        continue;
      }
      for (const auto& [lm, p] : row.items()) {
        auto i = c.lm_index_by_name(lm);
        if (!i || !p.is_number()) {
          r.errors.push_back({"workload.presence." + node + "." + lm, "unresolved LM or non-numeric value"});
          continue;
        }
        w.presence[*n][*i] = p.get<double>();
      }
    }
  }
  r.get(wl, "k_weights", w.k_weights, "workload");
  r.get(wl, "drift", w.drift, "workload");
  if (wl.contains("trace") && wl["trace"].is_string()) w.trace_path = wl["trace"].get<std::string>();
}

void read_dpp(const json& d, SimConfig& c, Reader& r) {
  auto& p = c.dpp;
  r.get(d, "v", p.v, "dpp");
  r.get(d, "p0", p.p0, "dpp");
  r.get(d, "p1", p.p1, "dpp");
  r.get(d, "p2", p.p2, "dpp");
  r.get(d, "lambda_churn", p.lambda_churn, "dpp");
  r.get(d, "kappa", p.kappa, "dpp");
  r.get(d, "epsilon", p.epsilon, "dpp");
  r.get(d, "cpu_grid", p.cpu_grid, "dpp");
  r.get(d, "gpu_grid", p.gpu_grid, "dpp");
  for (const char* key : {"alpha_cpu", "alpha_gpu"}) {
    if (!d.contains(key)) continue;
    auto& target = std::string(key) == "alpha_cpu" ? p.alpha_cpu : p.alpha_gpu;
    target.assign(c.lms.size(), 1.0);
    for (const auto& [lm, a] : d[key].items()) {
      auto i = c.lm_index_by_name(lm);
      if (!i || !a.is_number()) {
        r.errors.push_back({std::string("dpp.") + key + "." + lm, "unresolved LM or non-numeric value"});
        continue;
      }
      target[*i] = a.get<double>();
    }
  }
}

ScenarioLoad finish(SimConfig config, std::vector<ConfigViolation> errors) {
  ScenarioLoad out;
  if (errors.empty()) errors = validate_config(config);
  out.violations = std::move(errors);
  if (out.violations.empty()) out.config = std::move(config);
  return out;
}

}  // namespace

ScenarioLoad parse_scenario(const std::string& text) {
  std::vector<ConfigViolation> errors;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    return finish({}, {{"<document>", std::string("parse error: ") + e.what()}});
  }
  if (!doc.is_object()) return finish({}, {{"<document>", "scenario must be an object"}});

  SimConfig c;
  Reader r{errors};
  read_servers(doc, c, r);
  read_lms(doc, c, r);
  read_links(doc, c, r);
  r.get(doc, "slot_seconds", c.slot_seconds, "");
  r.get(doc, "slots_per_epoch", c.slots_per_epoch, "");
  r.get(doc, "tau_seconds", c.tau_seconds, "");
  r.get(doc, "lambda_weight", c.lambda_weight, "");
  r.get(doc, "seed", c.seed, "");
  read_workload(doc, c, r);
  c.dpp.alpha_cpu.assign(c.lms.size(), 1.0);
  c.dpp.alpha_gpu.assign(c.lms.size(), 1.0);
  if (doc.contains("dpp")) read_dpp(doc["dpp"], c, r);
  if (doc.contains("agentic")) {
    const auto& a = doc["agentic"];
    r.get(a, "overload_factor", c.agentic.overload_factor, "agentic");
    r.get(a, "retrieval_k", c.agentic.retrieval_k, "agentic");
    r.get(a, "max_shift_per_epoch", c.agentic.max_shift_per_epoch, "agentic");
    r.get(a, "planner_timeout_s", c.agentic.planner_timeout_s, "agentic");
  }
  if (doc.contains("policy")) {
    std::string name;
    r.get(doc, "policy", name, "");
    if (auto p = parse_policy_name(name)) {
      c.policy = *p;
    } else {
      errors.push_back({"policy", "unknown policy " + name});
    }
  }
  if (doc.contains("initial_policy")) {
    auto parsed = parse_macro_policy(doc["initial_policy"].dump(), c);
    if (parsed.policy) {
      c.initial_policy = std::move(parsed.policy);
    } else {
      errors.push_back({"initial_policy", parsed.error});
    }
  }
  return finish(std::move(c), std::move(errors));
}

ScenarioLoad load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) in.open(path + ".json");
  if (!in) {
    ScenarioLoad out;
    out.io_error = true;
    out.violations.push_back({"<file>", "cannot open scenario " + path});
    return out;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

namespace {

ojson seconds_json(double s) { return std::isinf(s) ? ojson(nullptr) : ojson(s); }

ojson dpp_json(const DppParams& p, const SimConfig& c) {
  ojson d;
  d["v"] = p.v;
  ojson acpu = ojson::object();
  ojson agpu = ojson::object();
  for (LmIndex i = 0; i < c.lms.size(); ++i) {
    if (i < p.alpha_cpu.size()) acpu[c.lms[i].name] = p.alpha_cpu[i];
    if (i < p.alpha_gpu.size()) agpu[c.lms[i].name] = p.alpha_gpu[i];
  }
  d["alpha_cpu"] = acpu;
  d["alpha_gpu"] = agpu;
  d["p0"] = p.p0;
  d["p1"] = p.p1;
  d["p2"] = p.p2;
  d["lambda_churn"] = p.lambda_churn;
  d["kappa"] = p.kappa;
  d["epsilon"] = p.epsilon;
  d["cpu_grid"] = p.cpu_grid;
  d["gpu_grid"] = p.gpu_grid;
  return d;
}

}  // namespace

std::string scenario_to_json(const SimConfig& c) {
  ojson doc;
  ojson servers = ojson::array();
  for (const auto& s : c.servers) {
    ojson j;
    j["id"] = s.id;
    j["cpu_cores"] = s.cpu_cores;
    j["ram_gb"] = s.ram_gb;
    j["vgpu_units"] = s.vgpu_units;
    j["vram_gb"] = s.vram_gb;
    j["gpu_capable"] = s.gpu_capable;
    j["hosts_inference"] = s.hosts_inference;
    servers.push_back(j);
  }
  doc["servers"] = servers;
  ojson lms = ojson::array();
  ojson latency = ojson::object();
  for (const auto& lm : c.lms) {
    ojson j;
    j["id"] = lm.id;
    j["name"] = lm.name;
    j["modality"] = to_string(lm.modality);
    j["min_ram_gb"] = lm.min_ram_gb;
    j["min_vram_gb"] = lm.min_vram_gb;
    j["deploy_ram_gb"] = lm.deploy_ram_gb;
    j["storage_gb"] = lm.storage_gb;
    j["cpu_feasible"] = lm.cpu_feasible;
    j["prompt_bytes"] = lm.prompt_bytes;
    j["result_bytes"] = lm.result_bytes;
    lms.push_back(j);
    ojson l;
    l["gpu_base_seconds_per_prompt"] = lm.gpu_base_seconds_per_prompt;
    l["cpu_base_seconds_per_prompt"] = seconds_json(lm.cpu_base_seconds_per_prompt);
    l["gpu_speedup_exponent"] = lm.gpu_speedup_exponent;
    l["cpu_speedup_exponent"] = lm.cpu_speedup_exponent;
    l["startup_seconds_gpu"] = lm.startup_seconds_gpu;
    l["startup_seconds_cpu"] = lm.startup_seconds_cpu;
    l["termination_seconds"] = lm.termination_seconds;
    latency[lm.name] = l;
  }
  doc["lms"] = lms;
  doc["latency"] = latency;
  doc["default_link"] = {{"bandwidth_bytes_per_s", c.default_link.bandwidth_bytes_per_s},
                         {"rtt_seconds", c.default_link.rtt_seconds},
                         {"full_mesh", c.default_link.full_mesh}};
  ojson links = ojson::array();
  for (const auto& l : c.links) {
    links.push_back({{"src", c.servers[l.src].id},
                     {"dst", c.servers[l.dst].id},
                     {"bandwidth_bytes_per_s", l.bandwidth_bytes_per_s},
                     {"rtt_seconds", l.rtt_seconds}});
  }
  doc["links"] = links;
  doc["slot_seconds"] = c.slot_seconds;
  doc["slots_per_epoch"] = c.slots_per_epoch;
  doc["tau_seconds"] = c.tau_seconds;
  doc["lambda_weight"] = c.lambda_weight;
  ojson presence = ojson::object();
  for (NodeIndex n = 0; n < c.servers.size() && n < c.workload.presence.size(); ++n) {
    ojson row = ojson::object();
    bool any = false;
    for (LmIndex i = 0; i < c.lms.size() && i < c.workload.presence[n].size(); ++i) {
      row[c.lms[i].name] = c.workload.presence[n][i];
      any = any || c.workload.presence[n][i] != 0;
    }
    if (any) presence[c.servers[n].id] = row;
  }
  ojson workload;
  workload["presence"] = presence;
  workload["k_weights"] = c.workload.k_weights;
  workload["drift"] = c.workload.drift;
  if (c.workload.trace_path) workload["trace"] = *c.workload.trace_path;
  doc["workload"] = workload;
  doc["dpp"] = dpp_json(c.dpp, c);
  doc["agentic"] = {{"overload_factor", c.agentic.overload_factor},
                    {"retrieval_k", c.agentic.retrieval_k},
                    {"max_shift_per_epoch", c.agentic.max_shift_per_epoch},
                    {"planner_timeout_s", c.agentic.planner_timeout_s}};
  doc["policy"] = to_string(c.policy);
  doc["seed"] = c.seed;
  if (c.initial_policy) doc["initial_policy"] = ojson::parse(macro_policy_to_json(*c.initial_policy, c));
  return doc.dump(2) + "\n";
}

std::string dpp_params_to_json(const DppParams& params, const SimConfig& config) {
  ojson doc;
  doc["dpp"] = dpp_json(params, config);
  return doc.dump(2) + "\n";
}

std::vector<ConfigViolation> apply_dpp_params(const std::string& text, SimConfig& config) {
  std::vector<ConfigViolation> errors;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    return {{"dpp", std::string("parse error: ") + e.what()}};
  }
  Reader r{errors};
  read_dpp(doc.contains("dpp") ? doc["dpp"] : doc, config, r);
  if (errors.empty()) errors = validate_config(config);
  return errors;
}

SimConfig default_scenario_config() {
  SimConfig c;
  c.servers = {
      {"vm1", 8, 16, 0, 0, false, false},   {"vm2", 24, 32, 0, 0, false, true},
      {"vm3", 16, 24, 2, 24, true, true},   {"vm4", 16, 24, 2, 24, true, true},
      {"vm5", 16, 24, 2, 24, true, true},   {"vm6", 16, 24, 2, 24, true, true},
      {"vm7", 16, 24, 4, 48, true, true},
  };
  auto lm = [](int id, Modality m, double min_ram, double vram, double deploy, double storage, bool cpu,
               double gpu_base, double cpu_base, double gpu_exp, double start_gpu, double start_cpu,
               std::int64_t prompt, std::int64_t result) {
    LmTypeSpec s;
    s.id = id;
    s.name = fmt::format("LM{}", id);
    s.modality = m;
    s.min_ram_gb = min_ram;
    s.min_vram_gb = vram;
    s.deploy_ram_gb = deploy;
    s.storage_gb = storage;
    s.cpu_feasible = cpu;
    s.gpu_base_seconds_per_prompt = gpu_base;
    s.cpu_base_seconds_per_prompt = cpu_base;
    s.gpu_speedup_exponent = gpu_exp;
    s.cpu_speedup_exponent = 0.6;
    s.startup_seconds_gpu = start_gpu;
    s.startup_seconds_cpu = start_cpu;
    s.termination_seconds = 10.0;
    s.prompt_bytes = prompt;
    s.result_bytes = result;
    return s;
  };
  constexpr std::int64_t kKiB = 1024;
  c.lms = {
      lm(1, Modality::kTextToText, 1.2, 4, 3.0, 7.5, true, 2, 16, 1.0, 20, 15, kKiB, 2 * kKiB),
      lm(2, Modality::kTextToText, 6.5, 8, 9.0, 13, true, 6, 48, 1.0, 30, 25, kKiB, 2 * kKiB),
      lm(3, Modality::kImageToText, 0.5, 4, 2.5, 10, true, 4, 80, 0.7, 25, 20, 512 * kKiB, 2 * kKiB),
      lm(4, Modality::kTextToImage, 1.6, 10, 3.5, 17.5, false, 25, kInfinity, 0.7, 40, 0, kKiB, 1024 * kKiB),
  };
  c.default_link = {125e6, 0.002, true};
  c.workload.presence.assign(c.servers.size(), {});
  for (NodeIndex n = 0; n < c.servers.size(); ++n) {
    if (c.servers[n].hosts_inference) {
      c.workload.presence[n] = {0.45, 0.3, 0.3, 0.175};
    } else {
      c.workload.presence[n] = {0, 0, 0, 0};
    }
  }
  c.dpp.alpha_cpu = {1.0, 1.0, 1.0, 1.0};
  c.dpp.alpha_gpu = {1.0, 1.2, 1.5, 1.5};
  return c;
}

void scale_presence(SimConfig& config, double factor) {
  for (auto& row : config.workload.presence) {
    for (auto& p : row) p = std::clamp(p * factor, 0.0, 1.0);
  }
}

}  // namespace edgellm
