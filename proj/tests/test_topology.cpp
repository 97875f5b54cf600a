#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "hyline/topology.hpp"
#include "oracles.hpp"

using namespace hyline;

namespace {

bool path_valid(const Topology& t, HostId src, HostId dst, const Path& p) {
  if (p.empty()) return false;
  NodeId at = src;
  std::set<NodeId> seen{src};
  for (LinkId l : p.links) {
    const Link& link = t.link(l);
    if (link.src != at) return false;
    at = link.dst;
    if (!seen.insert(at).second) return false;
  }
  return at == dst;
}

}  // namespace

TEST_CASE("fat-tree node and link counts follow the closed form") {
  for (int k : {4, 6, 8}) {
    for (int hpe : {1, 2, 4, 8}) {
      const Topology t = Topology::fat_tree(k, hpe, 1e9, 1e-6);
      const int hosts = k * (k / 2) * hpe;
      CHECK(t.host_count() == hosts);
      CHECK(t.switch_count() == k * k / 4 + k * k);
      CHECK(static_cast<int>(t.links().size()) == 2 * (hosts + k * k * k / 2));
      int edge = 0, agg = 0, core = 0;
      for (const Node& n : t.nodes()) {
        edge += n.kind == NodeKind::edge;
        agg += n.kind == NodeKind::agg;
        core += n.kind == NodeKind::core;
      }
      CHECK(edge == k * k / 2);
      CHECK(agg == k * k / 2);
      CHECK(core == k * k / 4);
    }
  }
}

TEST_CASE("k=8 with eight hosts per edge gives 256 hosts and 80 switches") {
  const Topology t = Topology::fat_tree(8, 8, 1e9, 1e-6);
  CHECK(t.host_count() == 256);
  CHECK(t.switch_count() == 80);
}

TEST_CASE("invalid fat-tree parameters throw") {
  CHECK_THROWS_AS(Topology::fat_tree(3, 2, 1e9, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(Topology::fat_tree(2, 2, 1e9, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(Topology::fat_tree(4, 0, 1e9, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(Topology::fat_tree(4, 2, 0.0, 1e-6), std::invalid_argument);
}

TEST_CASE("path counts and lengths by host pair") {
  const Topology t = Topology::fat_tree(4, 2, 1e9, 1e-6);
  // hosts 0,1 share edge 0; host 2 is on edge 1 of pod 0; host 4 is in pod 1
  CHECK(t.paths(0, 1).size() == 1);
  CHECK(t.paths(0, 1)[0].hops() == 2);
  CHECK(t.paths(0, 2).size() == 2);
  CHECK(t.paths(0, 2)[0].hops() == 4);
  CHECK(t.paths(0, 4).size() == 4);
  CHECK(t.paths(0, 4)[0].hops() == 6);
  CHECK(t.hop_count(0, 1) == 2);
  CHECK(t.hop_count(0, 2) == 4);
  CHECK(t.hop_count(0, 15) == 6);

  const Topology t8 = Topology::fat_tree(8, 4, 1e9, 1e-6);
  CHECK(t8.paths(0, t8.host_count() - 1).size() == 16);
  CHECK(t8.paths(0, 4).size() == 4);
}

TEST_CASE("every enumerated path is contiguous, acyclic and unique") {
  for (int k : {4, 6}) {
    const Topology t = Topology::fat_tree(k, 2, 1e9, 1e-6);
    for (HostId s = 0; s < t.host_count(); ++s) {
      for (HostId d = 0; d < t.host_count(); ++d) {
        if (s == d) continue;
        const auto ps = t.paths(s, d);
        std::set<Path> unique(ps.begin(), ps.end());
        CHECK(unique.size() == ps.size());
        for (const Path& p : ps) {
          CHECK(path_valid(t, s, d, p));
          CHECK(static_cast<int>(p.hops()) == t.hop_count(s, d));
        }
      }
    }
  }
}

TEST_CASE("link_between finds direct links and rejects missing ones") {
  const Topology t = Topology::fat_tree(4, 2, 1e9, 1e-6);
  const NodeId e = t.edge_of(0);
  const Link& up = t.link(t.link_between(0, e));
  CHECK(up.src == 0);
  CHECK(up.dst == e);
  CHECK_THROWS_AS(t.link_between(0, 1), std::out_of_range);
}

TEST_CASE("per-hop delay reproduces the 300us inter-pod RTT") {
  const double d = per_hop_delay_for_rtt(300e-6, 1e9, 1500, 40);
  CHECK(d == doctest::Approx(18.84e-6).epsilon(1e-9));
  const double rtt = 6 * (d + 1500 * 8 / 1e9) + 6 * (d + 40 * 8 / 1e9);
  CHECK(rtt == doctest::Approx(300e-6).epsilon(1e-12));
}

TEST_CASE("adjacency dump has one line per link") {
  const Topology t = Topology::fat_tree(4, 2, 1e9, 1e-6);
  std::ostringstream os;
  t.write_adjacency(os);
  std::istringstream is(os.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    LinkId id;
    NodeId a, b;
    double cap, delay;
    REQUIRE(static_cast<bool>(ls >> id >> a >> b >> cap >> delay));
    CHECK(t.link(id).src == a);
    CHECK(t.link(id).dst == b);
    ++n;
  }
  CHECK(n == t.links().size());
}

TEST_CASE("ecmp selection is a pure function of the flow key") {
  const Topology t = Topology::fat_tree(4, 2, 1e9, 1e-6);
  const auto paths = t.paths(0, 8);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const FlowKey key{0, 8, static_cast<std::uint32_t>(rng()), 80};
    CHECK(&ecmp_select(key, paths) == &ecmp_select(key, paths));
    CHECK(ecmp_hash(key) == ecmp_hash(FlowKey{key}));
  }
  const auto single = t.paths(0, 1);
  for (std::uint32_t p = 0; p < 50; ++p) CHECK(ecmp_select({0, 1, p, 80}, single) == single[0]);
}

TEST_CASE("ecmp spreads random keys evenly over four paths") {
  const Topology t = Topology::fat_tree(4, 2, 1e9, 1e-6);
  const auto paths = t.paths(0, 8);
  REQUIRE(paths.size() == 4);
  std::mt19937_64 rng(11);
  std::vector<std::int64_t> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const FlowKey key{static_cast<HostId>(rng() % 16), static_cast<HostId>(rng() % 16),
                      static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng())};
    const Path& p = ecmp_select(key, paths);
    for (std::size_t j = 0; j < 4; ++j)
      if (&p == &paths[j]) ++counts[j];
  }
  for (std::int64_t c : counts) CHECK(std::abs(static_cast<double>(c) / n - 0.25) < 0.02);
  // 3 degrees of freedom, 99.9th percentile
  CHECK(oracle::chi_square_uniform(counts) < 16.27);
}
