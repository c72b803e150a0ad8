#pragma once

// Seeded per-slot request arrivals and CSV trace replay.
//
// Trace format: header row "slot,origin_node,lm_id,k_prompts", then one
// request per row.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgellm/model.hpp"

namespace edgellm {

// Deterministic request id for the unique (slot, node, lm) triple.
std::uint64_t make_request_id(const SimConfig& config, int slot, NodeIndex node, LmIndex lm);

// Arrivals of one slot. Each (node, lm) pair independently draws presence and
// then k from the configured weights; k = 0 emits nothing. The result depends
// only on (config, seed, slot).
std::vector<Request> generate_slot_arrivals(const SimConfig& config, std::uint64_t seed, int slot);

class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Per-slot arrival lists; index = slot.
using Trace = std::vector<std::vector<Request>>;

Trace read_trace(std::istream& in, const SimConfig& config);
Trace replay_trace(const std::string& path, const SimConfig& config);
void write_trace(std::ostream& out, const Trace& trace, const SimConfig& config);

class ArrivalSource {
 public:
  virtual ~ArrivalSource() = default;
  virtual std::vector<Request> arrivals(int slot) = 0;
};

class GeneratedArrivals : public ArrivalSource {
 public:
  GeneratedArrivals(const SimConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {}
  std::vector<Request> arrivals(int slot) override { return generate_slot_arrivals(config_, seed_, slot); }

 private:
  const SimConfig& config_;
  std::uint64_t seed_;
};

class TraceArrivals : public ArrivalSource {
 public:
  explicit TraceArrivals(Trace trace) : trace_(std::move(trace)) {}
  std::vector<Request> arrivals(int slot) override;

 private:
  Trace trace_;
};

std::unique_ptr<ArrivalSource> make_arrival_source(const SimConfig& config, std::uint64_t seed);

}  // namespace edgellm
