#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "hyline/man.hpp"
#include "hyline/report.hpp"
#include "hyline/topology.hpp"
#include "hyline/workload.hpp"

namespace hyline {

enum class SchedulerMode : std::uint8_t { hyline, baseline_fair, baseline_srpt };

std::string_view to_string(SchedulerMode m);

/// Thrown when the event queue drains while flows are still unfinished.
class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimParams {
  Bytes h_bytes = kMB;  // flows below this are first class
  double t_cost_s = 100e-6;

  int packet_bytes = 1500;
  int ack_bytes = 40;

  int buffer_pkts = 225;
  int pause_pkts = 215;
  int resume_pkts = 205;
  bool pfc_enabled = true;

  int init_window = 25;
  int max_window = 200;  // keeps a class-2 backlog under the pause threshold
  int dupack_threshold = 3;
  double minrto_class1_s = 4e-3;
  double minrto_class2_s = 1.0;

  std::uint64_t seed = 1;  // manager tie-breaks
  AdmissionRule admission = AdmissionRule::min_cost;

  /// Baselines only: add the empty-fabric path latency to each fluid FCT.
  bool baseline_path_latency = true;

  bool record_control_log = false;
  /// Test hook: return true to drop this transmission at its first switch.
  std::function<bool(FlowId flow, std::int64_t seq, bool retransmission)> drop_hook;
};

/// Runs every flow of `trace` to completion. Packet-level for hyline,
/// fluid for the baselines.
RunReport run(const Topology& topo, const FlowTrace& trace, SchedulerMode mode,
              const SimParams& params);

}  // namespace hyline
