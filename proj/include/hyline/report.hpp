#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hyline/man.hpp"
#include "hyline/types.hpp"

namespace hyline {

struct FlowRecord {
  FlowId id = 0;
  FlowClass cls = FlowClass::first;
  Bytes bytes = 0;
  double arrival_s = 0.0;
  double start_s = 0.0;   // first payload byte leaves the source
  double finish_s = 0.0;  // last payload byte delivered
  int path_len = 0;       // links
  std::int64_t retx = 0;
  std::int64_t preemptions = 0;
  double wait_s = 0.0;     // first grant minus arrival
  double stopped_s = 0.0;  // total time between a stop and the next grant

  double fct() const { return finish_s - arrival_s; }
};

/// Run-wide counters, including the invariant checks. Every *_violations
/// field must be zero in a correct run.
struct RunCounters {
  std::int64_t events = 0;
  std::int64_t packets_sent = 0;
  std::int64_t drops_class1 = 0;
  std::int64_t drops_class2 = 0;
  std::int64_t timeouts_class1 = 0;
  std::int64_t timeouts_class2 = 0;
  std::int64_t retransmissions = 0;
  std::int64_t pause_events = 0;
  std::int64_t resume_events = 0;
  std::int64_t max_port_occupancy = 0;
  std::int64_t duplicate_deliveries = 0;  // packets the receiver already had

  std::int64_t occupancy_violations = 0;    // manager capacity/consistency check failed
  std::int64_t exclusive_violations = 0;    // two granted flows sending on one link
  std::int64_t priority_violations = 0;     // class 2 departed while class 1 waited
  std::int64_t preemption_violations = 0;   // stop issued against a smaller flow
  std::int64_t conservation_violations = 0; // delivered bytes != flow size
  std::int64_t reorder_violations = 0;      // class-2 first transmissions out of order
  std::int64_t buffer_violations = 0;       // port held more than its buffer

  std::int64_t total_violations() const {
    return occupancy_violations + exclusive_violations + priority_violations +
           preemption_violations + conservation_violations + reorder_violations +
           buffer_violations;
  }
};

/// One control-plane event as the hosts and the manager saw it.
struct ControlLogEntry {
  double time_s;
  ControlKind kind;
  FlowId flow;
  Bytes host_bytes_sent;  // payload bytes handed to the NIC so far
  Bytes man_remaining;    // manager's estimate at the same instant
};

struct RunReport {
  std::string scheme;
  std::vector<FlowRecord> flows;  // ordered by flow id
  RunCounters counters;
  ManStats man;
  double sim_end_s = 0.0;
  std::vector<ControlLogEntry> control_log;
};

inline constexpr const char* kFlowCsvHeader =
    "flow_id,class,bytes,arrival_s,start_s,finish_s,path_len,retx,preemptions,wait_s,stopped_s";

void write_flow_csv(std::ostream& os, const std::vector<FlowRecord>& flows);
std::vector<FlowRecord> read_flow_csv(std::istream& is);

/// "name,value" lines of the counters and manager statistics.
void write_counters_csv(std::ostream& os, const RunCounters& c, const ManStats& m);

}  // namespace hyline
