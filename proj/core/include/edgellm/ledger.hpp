#pragma once

// Finalized per-request records and their CSV form.
//
// CSV columns: request_id,lm,origin,dest,k,uplink_s,queue_s,infer_s,
// downlink_s,T_q,delta,slot,finish_s,reason
// The first eleven are the per-request latency ledger; slot, finish_s and
// reason let reports re-derive epoch attribution from the file alone.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgellm/model.hpp"

namespace edgellm {

struct LedgerRow {
  std::uint64_t request_id = 0;
  LmIndex lm = 0;
  NodeIndex origin = 0;
  NodeIndex dest = 0;
  int k = 0;
  int arrival_slot = 0;
  double uplink_s = 0.0;
  double queue_s = 0.0;
  double infer_s = 0.0;
  double downlink_s = 0.0;
  double t_q = 0.0;
  bool success = false;
  FailureReason reason = FailureReason::kNone;
  double finish_s = 0.0;

  friend bool operator==(const LedgerRow&, const LedgerRow&) = default;
};

struct RoutingLogEntry {
  int slot = 0;
  std::uint64_t request_id = 0;
  LmIndex lm = 0;
  NodeIndex origin = 0;
  NodeIndex dest = 0;
  int k = 0;
};

class LedgerFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_ledger_csv(std::ostream& out, const std::vector<LedgerRow>& rows, const SimConfig& config);
// Throws LedgerFormatError naming the offending line.
std::vector<LedgerRow> read_ledger_csv(std::istream& in, const SimConfig& config);

}  // namespace edgellm
