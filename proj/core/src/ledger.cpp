#include "edgellm/ledger.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace edgellm {

namespace {

constexpr const char* kHeader = "request_id,lm,origin,dest,k,uplink_s,queue_s,infer_s,downlink_s,T_q,delta,slot,finish_s,reason";

FailureReason parse_reason(const std::string& s) {
  if (s == "none") return FailureReason::kNone;
  if (s == "deadline") return FailureReason::kDeadline;
  if (s == "never-deployable") return FailureReason::kNeverDeployable;
  throw std::invalid_argument("reason");
}

}  // namespace

void write_ledger_csv(std::ostream& out, const std::vector<LedgerRow>& rows, const SimConfig& config) {
  out << kHeader << '\n';
  for (const auto& r : rows) {
    // 17 significant digits round-trip every double exactly.
    out << fmt::format("{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{:.17g},{}\n", r.request_id,
                       config.lms[r.lm].name, config.servers[r.origin].id, config.servers[r.dest].id, r.k,
                       r.uplink_s, r.queue_s, r.infer_s, r.downlink_s, r.t_q, r.success ? 1 : 0, r.arrival_slot,
                       r.finish_s, to_string(r.reason));
  }
}

std::vector<LedgerRow> read_ledger_csv(std::istream& in, const SimConfig& config) {
  std::vector<LedgerRow> rows;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return rows;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw LedgerFormatError("line 1: unexpected ledger header");
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    if (c.size() != 14) throw LedgerFormatError(fmt::format("line {}: expected 14 fields", line_no));
    try {
      LedgerRow r;
      r.request_id = std::stoull(c[0]);
      auto lm = config.lm_index_by_name(c[1]);
      auto origin = config.node_index(c[2]);
      auto dest = config.node_index(c[3]);
      if (!lm || !origin || !dest) throw std::invalid_argument("id");
      r.lm = *lm;
      r.origin = *origin;
      r.dest = *dest;
      r.k = std::stoi(c[4]);
      r.uplink_s = std::stod(c[5]);
      r.queue_s = std::stod(c[6]);
      r.infer_s = std::stod(c[7]);
      r.downlink_s = std::stod(c[8]);
      r.t_q = std::stod(c[9]);
      if (c[10] != "0" && c[10] != "1") throw std::invalid_argument("delta");
      r.success = c[10] == "1";
      r.arrival_slot = std::stoi(c[11]);
      r.finish_s = std::stod(c[12]);
      r.reason = parse_reason(c[13]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw LedgerFormatError(fmt::format("line {}: malformed ledger row", line_no));
    }
  }
  return rows;
}

}  // namespace edgellm
