#include "hyline/topology.hpp"

#include <ostream>
#include <string>

namespace hyline {

Topology Topology::fat_tree(int k, int hosts_per_edge, double link_capacity_bps,
                            double link_delay_s) {
  if (k < 4 || k % 2 != 0)
    throw std::invalid_argument("fat_tree: k must be an even integer >= 4, got " +
                                std::to_string(k));
  if (hosts_per_edge < 1)
    throw std::invalid_argument("fat_tree: hosts_per_edge must be >= 1");
  if (!(link_capacity_bps > 0.0))
    throw std::invalid_argument("fat_tree: link capacity must be positive");
  if (!(link_delay_s > 0.0))
    throw std::invalid_argument("fat_tree: link delay must be positive");

  Topology t;
  t.k_ = k;
  t.hosts_per_edge_ = hosts_per_edge;
  const int half = k / 2;
  const int edges = k * half;
  t.host_count_ = edges * hosts_per_edge;
  t.edge_base_ = t.host_count_;
  t.agg_base_ = t.edge_base_ + edges;
  t.core_base_ = t.agg_base_ + edges;
  const int total = t.core_base_ + half * half;

  t.nodes_.reserve(static_cast<std::size_t>(total));
  for (int h = 0; h < t.host_count_; ++h) {
    const int edge = h / hosts_per_edge;
    t.nodes_.push_back({h, NodeKind::host, edge / half, h % hosts_per_edge});
  }
  for (int e = 0; e < edges; ++e)
    t.nodes_.push_back({t.edge_base_ + e, NodeKind::edge, e / half, e % half});
  for (int a = 0; a < edges; ++a)
    t.nodes_.push_back({t.agg_base_ + a, NodeKind::agg, a / half, a % half});
  for (int c = 0; c < half * half; ++c)
    t.nodes_.push_back({t.core_base_ + c, NodeKind::core, -1, c});
  t.out_.resize(static_cast<std::size_t>(total));
  t.in_.resize(static_cast<std::size_t>(total));

  const auto cable = [&](NodeId a, NodeId b) {
    t.add_link(a, b, link_capacity_bps, link_delay_s);
    t.add_link(b, a, link_capacity_bps, link_delay_s);
  };
  for (int h = 0; h < t.host_count_; ++h) cable(h, t.edge_base_ + h / hosts_per_edge);
  for (int p = 0; p < k; ++p)
    for (int e = 0; e < half; ++e)
      for (int a = 0; a < half; ++a)
        cable(t.edge_base_ + p * half + e, t.agg_base_ + p * half + a);
  // aggregation switch j of every pod connects to core group j
  for (int p = 0; p < k; ++p)
    for (int a = 0; a < half; ++a)
      for (int m = 0; m < half; ++m) cable(t.agg_base_ + p * half + a, t.core_base_ + a * half + m);

  t.edge_paths_.assign(static_cast<std::size_t>(edges),
                       std::vector<std::vector<std::vector<LinkId>>>(static_cast<std::size_t>(edges)));
  for (int s = 0; s < edges; ++s) {
    for (int d = 0; d < edges; ++d) {
      auto& out = t.edge_paths_[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)];
      const NodeId es = t.edge_base_ + s;
      const NodeId ed = t.edge_base_ + d;
      const int ps = s / half;
      const int pd = d / half;
      if (s == d) {
        out.emplace_back();
      } else if (ps == pd) {
        for (int a = 0; a < half; ++a) {
          const NodeId agg = t.agg_base_ + ps * half + a;
          out.push_back({t.link_between(es, agg), t.link_between(agg, ed)});
        }
      } else {
        for (int a = 0; a < half; ++a) {
          const NodeId agg_s = t.agg_base_ + ps * half + a;
          const NodeId agg_d = t.agg_base_ + pd * half + a;
          for (int m = 0; m < half; ++m) {
            const NodeId core = t.core_base_ + a * half + m;
            out.push_back({t.link_between(es, agg_s), t.link_between(agg_s, core),
                           t.link_between(core, agg_d), t.link_between(agg_d, ed)});
          }
        }
      }
    }
  }
  return t;
}

LinkId Topology::add_link(NodeId a, NodeId b, double cap, double delay) {
  const auto id = static_cast<LinkId>(links_.size());
  links_.push_back({id, a, b, cap, delay});
  out_[static_cast<std::size_t>(a)].push_back(id);
  in_[static_cast<std::size_t>(b)].push_back(id);
  return id;
}

NodeId Topology::edge_of(HostId h) const {
  if (!is_host(h)) throw std::out_of_range("unknown host id " + std::to_string(h));
  return edge_base_ + h / hosts_per_edge_;
}

int Topology::edge_slot(NodeId edge) const { return edge - edge_base_; }

LinkId Topology::link_between(NodeId a, NodeId b) const {
  for (LinkId l : out_.at(static_cast<std::size_t>(a)))
    if (links_[static_cast<std::size_t>(l)].dst == b) return l;
  throw std::out_of_range("no link " + std::to_string(a) + " -> " + std::to_string(b));
}

std::vector<Path> Topology::paths(HostId src, HostId dst) const {
  if (!is_host(src) || !is_host(dst))
    throw std::out_of_range("paths: unknown host id");
  if (src == dst) throw std::invalid_argument("paths: src == dst");
  const NodeId es = edge_of(src);
  const NodeId ed = edge_of(dst);
  const LinkId up = link_between(src, es);
  const LinkId down = link_between(ed, dst);
  const auto& middles =
      edge_paths_[static_cast<std::size_t>(edge_slot(es))][static_cast<std::size_t>(edge_slot(ed))];
  std::vector<Path> result;
  result.reserve(middles.size());
  for (const auto& mid : middles) {
    Path p;
    p.links.reserve(mid.size() + 2);
    p.links.push_back(up);
    p.links.insert(p.links.end(), mid.begin(), mid.end());
    p.links.push_back(down);
    result.push_back(std::move(p));
  }
  return result;
}

int Topology::hop_count(HostId src, HostId dst) const {
  const NodeId es = edge_of(src);
  const NodeId ed = edge_of(dst);
  if (es == ed) return 2;
  if (node(es).pod == node(ed).pod) return 4;
  return 6;
}

void Topology::write_adjacency(std::ostream& os) const {
  for (const Link& l : links_)
    os << l.id << ' ' << l.src << ' ' << l.dst << ' ' << l.capacity_bps << ' '
       << l.propagation_delay_s << '\n';
}

double per_hop_delay_for_rtt(double rtt_s, double capacity_bps, int packet_bytes,
                             int ack_bytes, int one_way_hops) {
  const double serialization =
      one_way_hops * (packet_bytes + ack_bytes) * 8.0 / capacity_bps;
  const double delay = (rtt_s - serialization) / (2.0 * one_way_hops);
  if (!(delay > 0.0))
    throw std::invalid_argument("rtt too small for the serialization along the path");
  return delay;
}

std::uint64_t ecmp_hash(const FlowKey& key) {
  // splitmix64 finalizer over the packed 4-tuple
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t hosts = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.src)) << 32) |
                              static_cast<std::uint32_t>(key.dst);
  const std::uint64_t ports = (static_cast<std::uint64_t>(key.src_port) << 32) | key.dst_port;
  return mix(mix(hosts) ^ ports);
}

const Path& ecmp_select(const FlowKey& key, std::span<const Path> paths) {
  if (paths.empty()) throw std::invalid_argument("ecmp_select: no paths");
  return paths[ecmp_hash(key) % paths.size()];
}

}  // namespace hyline
