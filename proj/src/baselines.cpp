#include "hyline/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hyline {

std::vector<double> maxmin_rates(const std::vector<std::vector<LinkId>>& flow_links,
                                 const std::vector<double>& capacity) {
  const std::size_t n = flow_links.size();
  std::vector<double> rate(n, 0.0);
  std::vector<double> spare = capacity;
  std::vector<int> unfrozen_on(capacity.size(), 0);
  std::vector<bool> frozen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (flow_links[i].empty()) throw std::invalid_argument("maxmin_rates: flow without links");
    for (LinkId l : flow_links[i]) ++unfrozen_on[static_cast<std::size_t>(l)];
  }
  std::size_t left = n;
  while (left > 0) {
    double share = std::numeric_limits<double>::infinity();
    std::size_t bottleneck = 0;
    for (std::size_t l = 0; l < capacity.size(); ++l) {
      if (unfrozen_on[l] == 0) continue;
      const double s = std::max(0.0, spare[l]) / unfrozen_on[l];
      if (s < share) {
        share = s;
        bottleneck = l;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      const auto& links = flow_links[i];
      if (std::find(links.begin(), links.end(), static_cast<LinkId>(bottleneck)) == links.end()) continue;
      frozen[i] = true;
      rate[i] = share;
      --left;
      for (LinkId l : links) {
        spare[static_cast<std::size_t>(l)] -= share;
        --unfrozen_on[static_cast<std::size_t>(l)];
      }
    }
  }
  return rate;
}

std::vector<double> srpt_rates(const std::vector<std::vector<LinkId>>& flow_links,
                               const std::vector<double>& remaining,
                               const std::vector<FlowId>& ids,
                               const std::vector<double>& capacity) {
  const std::size_t n = flow_links.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remaining[a] != remaining[b] ? remaining[a] < remaining[b] : ids[a] < ids[b];
  });
  std::vector<bool> claimed(capacity.size(), false);
  std::vector<double> rate(n, 0.0);
  for (std::size_t i : order) {
    bool free = true;
    double r = std::numeric_limits<double>::infinity();
    for (LinkId l : flow_links[i]) {
      free = free && !claimed[static_cast<std::size_t>(l)];
      r = std::min(r, capacity[static_cast<std::size_t>(l)]);
    }
    if (!free) continue;
    rate[i] = r;
    for (LinkId l : flow_links[i]) claimed[static_cast<std::size_t>(l)] = true;
  }
  return rate;
}

RunReport fluid_run(const FlowTrace& trace, const Topology& topo, FluidPolicy policy,
                    const FluidOptions& opts) {
  std::vector<double> capacity;
  for (const Link& l : topo.links()) capacity.push_back(l.capacity_bps);

  struct Active {
    std::size_t index;  // into trace
    double remaining;   // bytes
  };

  std::vector<std::size_t> order(trace.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return trace[a].arrival_s < trace[b].arrival_s; });

  std::vector<Path> paths(trace.size());
  std::vector<double> finish(trace.size(), 0.0);
  std::vector<Active> active;
  std::size_t next = 0;
  double now = 0.0;

  while (next < order.size() || !active.empty()) {
    std::vector<double> rate;
    if (!active.empty()) {
      std::vector<std::vector<LinkId>> links;
      std::vector<double> rem;
      std::vector<FlowId> ids;
      for (const Active& a : active) {
        links.push_back(paths[a.index].links);
        rem.push_back(a.remaining);
        ids.push_back(trace[a.index].id);
      }
      rate = policy == FluidPolicy::maxmin ? maxmin_rates(links, capacity)
                                           : srpt_rates(links, rem, ids, capacity);
    }
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < active.size(); ++i)
      if (rate[i] > 0.0) dt = std::min(dt, active[i].remaining * 8.0 / rate[i]);
    const double t_arrival =
        next < order.size() ? trace[order[next]].arrival_s : std::numeric_limits<double>::infinity();
    const double t_next = std::min(now + dt, t_arrival);
    if (!std::isfinite(t_next)) throw std::logic_error("fluid_run: no progress possible");

    const double step = t_next - now;
    for (std::size_t i = 0; i < active.size(); ++i) active[i].remaining -= rate[i] * step / 8.0;
    now = t_next;
    std::vector<Active> still;
    for (const Active& a : active) {
      // rounding slack proportional to the flow size
      if (a.remaining <= 1e-9 * static_cast<double>(trace[a.index].bytes) + 1e-6)
        finish[a.index] = now;
      else
        still.push_back(a);
    }
    active.swap(still);
    while (next < order.size() && trace[order[next]].arrival_s <= now) {
      const std::size_t i = order[next++];
      const TraceEntry& e = trace[i];
      const std::vector<Path> cands = topo.paths(e.src, e.dst);
      paths[i] = ecmp_select({e.src, e.dst, static_cast<std::uint32_t>(e.id), 80}, cands);
      active.push_back({i, static_cast<double>(e.bytes)});
    }
  }

  RunReport r;
  r.scheme = policy == FluidPolicy::maxmin ? "baseline_fair" : "baseline_srpt";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceEntry& e = trace[i];
    FlowRecord rec;
    rec.id = e.id;
    rec.cls = classify(e.bytes, opts.h_bytes);
    rec.bytes = e.bytes;
    rec.arrival_s = e.arrival_s;
    rec.start_s = e.arrival_s;
    rec.finish_s = finish[i];
    rec.path_len = static_cast<int>(paths[i].hops());
    if (opts.add_path_latency) {
      const double first_pkt = static_cast<double>(std::min<Bytes>(e.bytes, opts.packet_bytes));
      double extra = 0.0;
      for (std::size_t h = 0; h < paths[i].hops(); ++h) {
        const Link& l = topo.link(paths[i].links[h]);
        extra += l.propagation_delay_s;
        if (h > 0) extra += first_pkt * 8.0 / l.capacity_bps;
      }
      rec.finish_s += extra;
    }
    r.flows.push_back(rec);
    r.sim_end_s = std::max(r.sim_end_s, rec.finish_s);
  }
  std::sort(r.flows.begin(), r.flows.end(),
            [](const FlowRecord& a, const FlowRecord& b) { return a.id < b.id; });
  return r;
}

}  // namespace hyline
