#pragma once

#include <vector>

#include "hyline/report.hpp"
#include "hyline/topology.hpp"
#include "hyline/workload.hpp"

namespace hyline {

enum class FluidPolicy : std::uint8_t { maxmin, srpt };

struct FluidOptions {
  /// Add the empty-fabric latency (propagation plus store-and-forward of
  /// the first packet) so a lone flow finishes exactly at its ideal FCT.
  bool add_path_latency = false;
  int packet_bytes = 1500;
  Bytes h_bytes = kMB;  // only labels the class column of the report
};

/// Water-filling max-min fair rates. `flow_links[i]` lists the links of
/// flow i; every flow must cross at least one link.
std::vector<double> maxmin_rates(const std::vector<std::vector<LinkId>>& flow_links,
                                 const std::vector<double>& capacity);

/// Greedy SRPT: flows in (remaining, id) order take their whole path at the
/// bottleneck rate if every link on it is still unclaimed; others get 0.
std::vector<double> srpt_rates(const std::vector<std::vector<LinkId>>& flow_links,
                               const std::vector<double>& remaining,
                               const std::vector<FlowId>& ids,
                               const std::vector<double>& capacity);

/// Event-driven fluid simulation on fixed ECMP paths.
RunReport fluid_run(const FlowTrace& trace, const Topology& topo, FluidPolicy policy,
                    const FluidOptions& opts = {});

}  // namespace hyline
