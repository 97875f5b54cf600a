#include "hyline/report.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace hyline {

void write_flow_csv(std::ostream& os, const std::vector<FlowRecord>& flows) {
  os << kFlowCsvHeader << '\n';
  char buf[256];
  for (const FlowRecord& r : flows) {
    std::snprintf(buf, sizeof buf, "%lld,%d,%lld,%.9f,%.9f,%.9f,%d,%lld,%lld,%.9f,%.9f\n",
                  static_cast<long long>(r.id), static_cast<int>(r.cls),
                  static_cast<long long>(r.bytes), r.arrival_s, r.start_s, r.finish_s, r.path_len,
                  static_cast<long long>(r.retx), static_cast<long long>(r.preemptions), r.wait_s,
                  r.stopped_s);
    os << buf;
  }
}

std::vector<FlowRecord> read_flow_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kFlowCsvHeader)
    throw std::runtime_error("flow CSV: unexpected header");
  std::vector<FlowRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    FlowRecord r;
    long long id = 0, bytes = 0, retx = 0, pre = 0;
    int cls = 0;
    if (std::sscanf(line.c_str(), "%lld,%d,%lld,%lf,%lf,%lf,%d,%lld,%lld,%lf,%lf", &id, &cls, &bytes,
                    &r.arrival_s, &r.start_s, &r.finish_s, &r.path_len, &retx, &pre, &r.wait_s,
                    &r.stopped_s) != 11)
      throw std::runtime_error("flow CSV: bad row '" + line + "'");
    if (cls != 1 && cls != 2) throw std::runtime_error("flow CSV: bad class in '" + line + "'");
    r.id = id;
    r.cls = static_cast<FlowClass>(cls);
    r.bytes = bytes;
    r.retx = retx;
    r.preemptions = pre;
    out.push_back(r);
  }
  return out;
}

void write_counters_csv(std::ostream& os, const RunCounters& c, const ManStats& m) {
  os << "name,value\n";
  const auto row = [&](const char* name, long long v) { os << name << ',' << v << '\n'; };
  row("events", c.events);
  row("packets_sent", c.packets_sent);
  row("drops_class1", c.drops_class1);
  row("drops_class2", c.drops_class2);
  row("timeouts_class1", c.timeouts_class1);
  row("timeouts_class2", c.timeouts_class2);
  row("retransmissions", c.retransmissions);
  row("pause_events", c.pause_events);
  row("resume_events", c.resume_events);
  row("max_port_occupancy", c.max_port_occupancy);
  row("duplicate_deliveries", c.duplicate_deliveries);
  row("occupancy_violations", c.occupancy_violations);
  row("exclusive_violations", c.exclusive_violations);
  row("priority_violations", c.priority_violations);
  row("preemption_violations", c.preemption_violations);
  row("conservation_violations", c.conservation_violations);
  row("reorder_violations", c.reorder_violations);
  row("buffer_violations", c.buffer_violations);
  row("man_requests", m.requests);
  row("man_removals", m.removals);
  row("man_find_path_calls", m.find_path_calls);
  row("man_evaluations", m.evaluations);
  row("man_request_evaluations", m.request_evaluations);
  row("man_bound_violations", m.bound_violations);
  row("man_reschedule_passes", m.reschedule_passes);
  row("man_reschedule_visits", m.reschedule_visits);
  row("man_admissions", m.admissions);
  row("man_rejections", m.rejections);
  row("man_preemptions", m.preemptions);
  row("man_illegal_preemptions", m.illegal_preemptions);
  row("man_max_active", m.max_active);
}

}  // namespace hyline
