#include "edgellm/workload.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "edgellm/rng.hpp"

namespace edgellm {

std::uint64_t make_request_id(const SimConfig& config, int slot, NodeIndex node, LmIndex lm) {
  const std::uint64_t nodes = config.servers.size();
  const std::uint64_t types = config.lms.size();
  return (static_cast<std::uint64_t>(slot) * nodes + node) * types + lm + 1;
}

namespace {

double drift_multiplier(const SimConfig& config, int slot, LmIndex lm) {
  const auto& drift = config.workload.drift;
  if (drift.empty()) return 1.0;
  const std::size_t epoch = static_cast<std::size_t>(slot / config.slots_per_epoch);
  const auto& row = drift[std::min(epoch, drift.size() - 1)];
  return lm < row.size() ? row[lm] : 1.0;
}

Request make_request(const SimConfig& config, int slot, NodeIndex node, LmIndex lm, int k) {
  Request r;
  r.request_id = make_request_id(config, slot, node, lm);
  r.lm = lm;
  r.origin = node;
  r.arrival_slot = slot;
  r.k_prompts = k;
  r.arrival_time = slot * config.slot_seconds;
  return r;
}

}  // namespace

std::vector<Request> generate_slot_arrivals(const SimConfig& config, std::uint64_t seed, int slot) {
  Rng rng = make_rng(seed, RngStream::kWorkload, static_cast<std::uint64_t>(slot));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<int> k_dist(config.workload.k_weights.begin(), config.workload.k_weights.end());
  std::vector<Request> out;
  for (NodeIndex n = 0; n < config.servers.size(); ++n) {
    if (!config.servers[n].hosts_inference || n >= config.workload.presence.size()) continue;
    for (LmIndex i = 0; i < config.lms.size(); ++i) {
      // Always consume both draws so the stream layout is load-independent.
      const double u = unit(rng);
      const int k = k_dist(rng);
      const double p = std::min(1.0, config.workload.presence[n][i] * drift_multiplier(config, slot, i));
      if (u < p && k > 0) out.push_back(make_request(config, slot, n, i, k));
    }
  }
  return out;
}

TraceError::TraceError(std::size_t line, const std::string& message)
    : std::runtime_error(fmt::format("trace line {}: {}", line, message)), line_(line) {}

Trace read_trace(std::istream& in, const SimConfig& config) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<std::vector<bool>> seen;  // per slot: node * types + lm
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "slot,origin_node,lm_id,k_prompts") throw TraceError(line_no, "missing or malformed header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw TraceError(line_no, "expected 4 fields");
    int slot = 0, lm_id = 0, k = 0;
    try {
      std::size_t used = 0;
      slot = std::stoi(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("slot");
      lm_id = std::stoi(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("lm_id");
      k = std::stoi(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("k");
    } catch (const std::exception&) {
      throw TraceError(line_no, "non-integer field");
    }
    if (slot < 0) throw TraceError(line_no, "negative slot");
    auto node = config.node_index(cells[1]);
    if (!node) throw TraceError(line_no, "unknown node " + cells[1]);
    if (!config.servers[*node].hosts_inference) throw TraceError(line_no, "control node cannot originate requests");
    auto lm = config.lm_index(lm_id);
    if (!lm) throw TraceError(line_no, fmt::format("unknown LM id {}", lm_id));
    if (k < 1 || k > 8) throw TraceError(line_no, "k_prompts outside [1, 8]");
    if (static_cast<std::size_t>(slot) >= trace.size()) {
      trace.resize(slot + 1);
      seen.resize(slot + 1, std::vector<bool>(config.servers.size() * config.lms.size(), false));
    }
    auto flag = seen[slot][*node * config.lms.size() + *lm];
    if (flag) throw TraceError(line_no, "duplicate (slot, node, lm) request");
    seen[slot][*node * config.lms.size() + *lm] = true;
    trace[slot].push_back(make_request(config, slot, *node, *lm, k));
  }
  // Same order as the generator: node-major, then LM.
  for (auto& slot_list : trace) {
    std::sort(slot_list.begin(), slot_list.end(),
              [](const Request& a, const Request& b) { return a.request_id < b.request_id; });
  }
  return trace;
}

Trace replay_trace(const std::string& path, const SimConfig& config) {
  std::ifstream in(path);
  if (!in) throw TraceError(0, "cannot open " + path);
  return read_trace(in, config);
}

void write_trace(std::ostream& out, const Trace& trace, const SimConfig& config) {
  out << "slot,origin_node,lm_id,k_prompts\n";
  for (const auto& slot_list : trace) {
    for (const auto& r : slot_list) {
      out << r.arrival_slot << ',' << config.servers[r.origin].id << ',' << config.lms[r.lm].id << ','
          << r.k_prompts << '\n';
    }
  }
}

std::vector<Request> TraceArrivals::arrivals(int slot) {
  if (slot < 0 || static_cast<std::size_t>(slot) >= trace_.size()) return {};
  return trace_[slot];
}

std::unique_ptr<ArrivalSource> make_arrival_source(const SimConfig& config, std::uint64_t seed) {
  if (config.workload.trace_path) return std::make_unique<TraceArrivals>(replay_trace(*config.workload.trace_path, config));
  return std::make_unique<GeneratedArrivals>(config, seed);
}

}  // namespace edgellm
