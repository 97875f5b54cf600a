#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "hyline/types.hpp"

namespace hyline {

enum class NodeKind : std::uint8_t { host, edge, agg, core };

struct Node {
  NodeId id;
  NodeKind kind;
  int pod;    // -1 for core switches
  int index;  // position within (pod, kind); core: global index
};

/// Directed link; a physical cable is two of these.
struct Link {
  LinkId id;
  NodeId src;
  NodeId dst;
  double capacity_bps;
  double propagation_delay_s;
};

struct FlowKey {
  HostId src;
  HostId dst;
  std::uint32_t src_port;
  std::uint32_t dst_port;
};

/// Three-tier fat-tree. Node ids are laid out as hosts first (host id ==
/// node id), then edge, aggregation and core switches.
class Topology {
 public:
  static Topology fat_tree(int k, int hosts_per_edge, double link_capacity_bps,
                           double link_delay_s);

  int k() const { return k_; }
  int hosts_per_edge() const { return hosts_per_edge_; }
  int host_count() const { return host_count_; }
  int switch_count() const { return static_cast<int>(nodes_.size()) - host_count_; }

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const Link& link(LinkId id) const { return links_.at(static_cast<std::size_t>(id)); }

  bool is_host(NodeId id) const { return id >= 0 && id < host_count_; }
  NodeId edge_of(HostId h) const;
  /// Throws std::out_of_range when no direct link exists.
  LinkId link_between(NodeId a, NodeId b) const;
  std::span<const LinkId> outbound(NodeId n) const { return out_.at(static_cast<std::size_t>(n)); }
  std::span<const LinkId> inbound(NodeId n) const { return in_.at(static_cast<std::size_t>(n)); }

  /// All equal-length shortest paths, ordered by agg/core switch id.
  std::vector<Path> paths(HostId src, HostId dst) const;

  /// Hop count of the shortest paths between two hosts (2, 4 or 6).
  int hop_count(HostId src, HostId dst) const;

  /// One "link_id src dst capacity delay" line per link.
  void write_adjacency(std::ostream& os) const;

 private:
  Topology() = default;
  LinkId add_link(NodeId a, NodeId b, double cap, double delay);
  int edge_slot(NodeId edge) const;

  int k_ = 0;
  int hosts_per_edge_ = 0;
  int host_count_ = 0;
  NodeId edge_base_ = 0;
  NodeId agg_base_ = 0;
  NodeId core_base_ = 0;
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<LinkId>> out_;
  std::vector<std::vector<LinkId>> in_;
  // switch-only segments between edge switches, indexed [src_edge][dst_edge]
  std::vector<std::vector<std::vector<std::vector<LinkId>>>> edge_paths_;
};

/// Per-hop propagation delay giving the requested empty-network inter-pod
/// RTT for one full data packet and its ACK, store-and-forward included.
double per_hop_delay_for_rtt(double rtt_s, double capacity_bps, int packet_bytes,
                             int ack_bytes, int one_way_hops = 6);

std::uint64_t ecmp_hash(const FlowKey& key);

/// Flow-based ECMP: pure function of the 4-tuple.
const Path& ecmp_select(const FlowKey& key, std::span<const Path> paths);

}  // namespace hyline
