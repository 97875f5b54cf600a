#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hyline/types.hpp"

namespace hyline {

enum class FlowState : std::uint8_t { requested, permitted, stopped, finished };

/// A second-class flow as seen by the manager. Priority is the remaining
/// size: smaller remaining means higher priority.
struct Flow {
  FlowId id = 0;
  HostId src = 0;
  HostId dst = 0;
  Bytes size = 0;
  Bytes remaining = 0;
  FlowClass cls = FlowClass::second;
  FlowState state = FlowState::requested;
  std::optional<Path> path;  // set iff state == permitted
  double arrival_time = 0.0;
  double line_rate_bps = 0.0;
  std::vector<double> grant_times;
  std::vector<double> stop_times;
  std::vector<Path> candidates;

  Bytes served_closed = 0;  // bytes accounted for in finished permitted intervals
};

struct FlowRequest {
  FlowId id;
  HostId src;
  HostId dst;
  Bytes size;
  double line_rate_bps;
  double arrival_time;
};

/// Cost inputs for placing one flow on one path.
struct PathEvaluation {
  Path path;
  bool feasible = false;        // capacity can be made available by preemption
  int n_preempt = 0;            // N
  std::vector<FlowId> preempt_list;
  Bytes max_conflict_remaining = 0;  // P_max
  double remaining_bw = 0.0;
  std::int64_t evaluations = 0;  // conflict sets explored
};

/// Extra total completion time when the new flow waits behind the largest
/// conflicting flow on the path.
Bytes path_cost_no_preempt(const PathEvaluation& eval);
/// Extra total completion time when every preempted flow is delayed by the
/// new flow's remaining size.
Bytes path_cost_preempt(const PathEvaluation& eval, const Flow& new_flow);

struct FindPathResult {
  bool found = false;
  bool any_feasible = false;
  std::vector<FlowId> preempt_list;
  std::optional<Path> path;
  Bytes mnp = 0;           // N * P_new of the selected path
  Bytes min_max_prio = 0;  // minimum over all paths of P_max
  std::int64_t evaluations = 0;
  std::int64_t evaluation_bound = 0;  // sum over paths of (M/S)^l
};

enum class ControlKind : std::uint8_t { rts, cts, sts, fin };

std::string_view to_string(ControlKind k);

struct ControlMessage {
  ControlKind kind;
  FlowId flow;
  HostId host;
  std::optional<Path> path;  // CTS only
  Bytes remaining = 0;       // manager's view when the message was issued

  friend bool operator==(const ControlMessage&, const ControlMessage&) = default;
};

enum class AdmissionRule : std::uint8_t {
  min_cost,        // preempt iff N * P_new < min P_max (zero-preemption paths always)
  always_preempt,  // preempt whenever legal; single-link SRPT intuition, for comparison
};

struct ManOptions {
  AdmissionRule rule = AdmissionRule::min_cost;
  std::uint64_t seed = 1;
};

struct ManStats {
  std::int64_t requests = 0;
  std::int64_t removals = 0;
  std::int64_t find_path_calls = 0;
  std::int64_t evaluations = 0;
  std::int64_t request_evaluations = 0;  // evaluations inside new-flow FindPath only
  std::int64_t bound_violations = 0;
  std::int64_t reschedule_passes = 0;
  std::int64_t reschedule_visits = 0;
  std::int64_t admissions = 0;
  std::int64_t rejections = 0;
  std::int64_t preemptions = 0;
  std::int64_t illegal_preemptions = 0;
  std::int64_t max_active = 0;

  /// Total scheduling work: path evaluations plus flow-list visits.
  std::int64_t work() const { return evaluations + reschedule_visits; }
};

/// The central manager. Single-threaded; callers serialize mutations.
class Manager {
 public:
  explicit Manager(std::vector<double> link_capacity_bps, ManOptions opts = {});

  std::vector<ControlMessage> new_request(const FlowRequest& req, std::vector<Path> candidates,
                                          double now);
  std::vector<ControlMessage> remove_request(FlowId id, double now);
  Bytes update_remaining(FlowId id, double now);
  /// Brings every flow's remaining size to `now` and restores list order.
  void advance(double now);

  PathEvaluation evaluate_path(const Flow& f, const Path& p);
  FindPathResult find_path(const Flow& f, std::span<const Path> paths);
  std::vector<ControlMessage> schedule(FlowId id);
  std::vector<ControlMessage> reschedule();

  bool contains(FlowId id) const { return flows_.count(id) != 0; }
  const Flow& flow(FlowId id) const;
  std::span<const FlowId> flow_list() const { return flow_list_; }
  std::span<const FlowId> occupants(LinkId l) const {
    return occupancy_.at(static_cast<std::size_t>(l));
  }
  double capacity(LinkId l) const { return capacity_.at(static_cast<std::size_t>(l)); }
  const ManStats& stats() const { return stats_; }
  double now() const { return now_; }

  /// Capacity, occupancy/path consistency and list order. Returns false and
  /// fills `why` on the first violation found.
  bool check_invariants(std::string* why = nullptr) const;

 private:
  Flow& mut(FlowId id);
  Bytes remaining_at(const Flow& f, double now) const;
  void close_interval(Flow& f);
  void occupy(Flow& f, const Path& p);
  void release(Flow& f);
  void sort_list();
  void apply_admission(Flow& f, const FindPathResult& r, std::vector<ControlMessage>& out,
                       std::vector<FlowId>& newly_stopped);
  void reschedule_pass(std::set<FlowId> skip, std::vector<ControlMessage>& out);
  std::int64_t path_bound(const Path& p, double rate_bps) const;

  std::vector<double> capacity_;
  ManOptions opts_;
  std::mt19937_64 rng_;
  std::map<FlowId, Flow> flows_;
  std::vector<FlowId> flow_list_;
  std::vector<std::vector<FlowId>> occupancy_;
  std::map<FlowId, double> permitted_since_;
  double now_ = 0.0;
  ManStats stats_;
};

}  // namespace hyline
