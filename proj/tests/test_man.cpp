#include <chrono>
#include <random>

#include "doctest.h"
#include "hyline/man.hpp"
#include "oracles.hpp"

using namespace hyline;

namespace {

constexpr double kRate = 1e9;

FlowRequest req(FlowId id, Bytes size, double t = 0.0) { return {id, 0, 1, size, kRate, t}; }

Path path(std::vector<LinkId> links) { return Path{std::move(links)}; }

ControlMessage sts(FlowId f, Bytes rem) { return {ControlKind::sts, f, 0, std::nullopt, rem}; }
ControlMessage cts(FlowId f, const Path& p, Bytes rem) { return {ControlKind::cts, f, 0, p, rem}; }

Flow probe(FlowId id, Bytes remaining) {
  Flow f;
  f.id = id;
  f.size = f.remaining = remaining;
  f.line_rate_bps = kRate;
  return f;
}

/// Two disjoint paths: path 1 = links {0,1,2} carrying flows 3,4,5 and
/// path 2 = links {3,4} carrying flows 1,2. Each flow also owns a private
/// link so it is admitted without conflicts.
struct TwoPathInstance {
  Manager man{std::vector<double>(32, kRate)};
  Path p1 = path({0, 1, 2});
  Path p2 = path({3, 4});

  explicit TwoPathInstance(const std::vector<Bytes>& p) {
    const LinkId shared[] = {3, 4, 0, 1, 2};
    for (int i = 0; i < 5; ++i) {
      const auto msgs = man.new_request(req(i + 1, p[static_cast<std::size_t>(i)]),
                                        {path({shared[i], 10 + i})}, 0.0);
      REQUIRE(msgs.size() == 1);
      REQUIRE(msgs[0].kind == ControlKind::cts);
    }
  }
};

}  // namespace

TEST_CASE("path costs on the two-path example") {
  TwoPathInstance inst({8 * kMB, 10 * kMB, 6 * kMB, 7 * kMB, 9 * kMB});
  const Flow f6 = probe(6, 4 * kMB);
  const PathEvaluation e1 = inst.man.evaluate_path(f6, inst.p1);
  const PathEvaluation e2 = inst.man.evaluate_path(f6, inst.p2);
  CHECK(e1.feasible);
  CHECK(e1.n_preempt == 3);
  CHECK(path_cost_no_preempt(e1) == 9 * kMB);
  CHECK(path_cost_preempt(e1, f6) == 12 * kMB);
  CHECK(e2.n_preempt == 2);
  CHECK(path_cost_no_preempt(e2) == 10 * kMB);
  CHECK(path_cost_preempt(e2, f6) == 8 * kMB);
  CHECK(e2.preempt_list == std::vector<FlowId>{1, 2});

  const Path both[] = {inst.p1, inst.p2};
  const FindPathResult r = inst.man.find_path(f6, both);
  CHECK(r.found);
  CHECK(r.min_max_prio == 9 * kMB);
  CHECK(r.mnp == 8 * kMB);
  CHECK(*r.path == inst.p2);
  CHECK(r.preempt_list == std::vector<FlowId>{1, 2});
}

TEST_CASE("new request on the two-path example stops flows 1 and 2 then grants path 2") {
  TwoPathInstance inst({8 * kMB, 10 * kMB, 6 * kMB, 7 * kMB, 9 * kMB});
  const auto msgs = inst.man.new_request(req(6, 4 * kMB), {inst.p1, inst.p2}, 0.0);
  const std::vector<ControlMessage> want{sts(1, 8 * kMB), sts(2, 10 * kMB), cts(6, inst.p2, 4 * kMB)};
  CHECK(msgs == want);
  CHECK(inst.man.flow(1).state == FlowState::stopped);
  CHECK(inst.man.flow(2).state == FlowState::stopped);
  CHECK(inst.man.check_invariants());
  CHECK(inst.man.stats().illegal_preemptions == 0);
}

TEST_CASE("free path and conflict costs") {
  Manager man(std::vector<double>(8, kRate));
  const Flow f = probe(9, 4 * kMB);
  const PathEvaluation free_eval = man.evaluate_path(f, path({0, 1}));
  CHECK(free_eval.feasible);
  CHECK(path_cost_no_preempt(free_eval) == 0);
  CHECK(path_cost_preempt(free_eval, f) == 0);
  CHECK(free_eval.remaining_bw == kRate);

  man.new_request(req(1, 7 * kMB), {path({0, 4})}, 0.0);
  man.new_request(req(2, 9 * kMB), {path({1, 5})}, 0.0);
  const PathEvaluation e = man.evaluate_path(f, path({0, 1}));
  CHECK(path_cost_no_preempt(e) == 9 * kMB);
  CHECK(path_cost_preempt(e, f) == 8 * kMB);
  CHECK(e.remaining_bw == 0.0);

  // three conflicts, new flow 4MB
  man.new_request(req(3, 8 * kMB), {path({2, 6})}, 0.0);
  const PathEvaluation e3 = man.evaluate_path(f, path({0, 1, 2}));
  CHECK(path_cost_preempt(e3, f) == 12 * kMB);
}

TEST_CASE("conflict costs agree with brute-force schedules") {
  // conflicts {7, 9} on a two-link path, new flow 4: waiting adds 9, preempting adds 8
  const std::vector<oracle::ChainJob> jobs{{{0}, 7}, {{1}, 9}, {{0, 1}, 4}};
  const std::int64_t base = 7 + 9 + 4;
  CHECK(oracle::total(oracle::priority_schedule(jobs, {0, 1, 2})) - base == 9);
  CHECK(oracle::total(oracle::priority_schedule(jobs, {2, 0, 1})) - base == 8);
}

TEST_CASE("two-link chain: preemption would cost more, the manager waits") {
  const auto start = std::chrono::steady_clock::now();
  Manager man(std::vector<double>(4, kRate));
  man.new_request(req(1, 5), {path({0, 2})}, 0.0);
  man.new_request(req(2, 4), {path({1, 3})}, 0.0);
  const auto msgs = man.new_request(req(3, 3), {path({0, 1})}, 0.0);
  CHECK(msgs == std::vector<ControlMessage>{sts(3, 3)});

  const std::vector<oracle::ChainJob> jobs{{{0}, 5}, {{1}, 4}, {{0, 1}, 3}};
  CHECK(oracle::total(oracle::priority_schedule(jobs, {0, 1, 2})) == 17);
  CHECK(oracle::total(oracle::priority_schedule(jobs, {2, 0, 1})) == 18);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));

  Manager eager(std::vector<double>(4, kRate), {AdmissionRule::always_preempt, 1});
  eager.new_request(req(1, 5), {path({0, 2})}, 0.0);
  eager.new_request(req(2, 4), {path({1, 3})}, 0.0);
  const auto pre = eager.new_request(req(3, 3), {path({0, 1})}, 0.0);
  CHECK(pre == std::vector<ControlMessage>{sts(1, 5), sts(2, 4), cts(3, path({0, 1}), 3)});
}

TEST_CASE("all paths free: no preemption and the widest path") {
  Manager man(std::vector<double>{kRate, kRate, 2 * kRate, 2 * kRate});
  const auto msgs = man.new_request(req(1, 5 * kMB), {path({0, 1}), path({2, 3})}, 0.0);
  REQUIRE(msgs.size() == 1);
  CHECK(msgs[0].kind == ControlKind::cts);
  CHECK(*msgs[0].path == path({2, 3}));
}

TEST_CASE("request blocked by higher-priority flows is told to stop") {
  Manager man(std::vector<double>(4, kRate));
  man.new_request(req(1, 1 * kMB), {path({0})}, 0.0);
  man.new_request(req(2, 1 * kMB), {path({1})}, 0.0);
  const auto msgs = man.new_request(req(3, 5 * kMB), {path({0}), path({1})}, 0.0);
  CHECK(msgs == std::vector<ControlMessage>{sts(3, 5 * kMB)});
  CHECK(man.stats().rejections == 1);
}

TEST_CASE("equal remaining sizes never preempt each other") {
  Manager man(std::vector<double>(2, kRate), {AdmissionRule::always_preempt, 1});
  man.new_request(req(1, 3 * kMB), {path({0})}, 0.0);
  const auto msgs = man.new_request(req(2, 3 * kMB), {path({0})}, 0.0);
  CHECK(msgs == std::vector<ControlMessage>{sts(2, 3 * kMB)});
}

TEST_CASE("duplicate and unknown flows are rejected") {
  Manager man(std::vector<double>(2, kRate));
  man.new_request(req(1, kMB), {path({0})}, 0.0);
  CHECK_THROWS_AS(man.new_request(req(1, kMB), {path({0})}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(man.remove_request(99, 0.0), std::out_of_range);
  const auto none = man.new_request(req(2, kMB), {}, 0.0);
  CHECK(none == std::vector<ControlMessage>{sts(2, kMB)});
}

TEST_CASE("chain: admitting A stops B, and the same pass admits stopped C") {
  Manager man(std::vector<double>(4, kRate));
  const Path pb = path({0, 1});
  const Path pc = path({1, 2});
  const Path pa = path({0, 3});
  CHECK(man.new_request(req(10, 5 * kMB), {pb}, 0.0) ==
        std::vector<ControlMessage>{cts(10, pb, 5 * kMB)});
  CHECK(man.new_request(req(20, 6 * kMB), {pc}, 0.0) == std::vector<ControlMessage>{sts(20, 6 * kMB)});
  const auto msgs = man.new_request(req(30, 2 * kMB), {pa}, 0.0);
  CHECK(msgs == std::vector<ControlMessage>{sts(10, 5 * kMB), cts(30, pa, 2 * kMB), cts(20, pc, 6 * kMB)});
  CHECK(man.check_invariants());
}

TEST_CASE("removal: no stopped flows, one waiting flow, two competing flows") {
  SUBCASE("finish with no stopped flows") {
    Manager man(std::vector<double>(2, kRate));
    man.new_request(req(1, kMB), {path({0})}, 0.0);
    CHECK(man.remove_request(1, 0.008).empty());
  }
  SUBCASE("the waiting flow takes the freed path") {
    Manager man(std::vector<double>(2, kRate));
    man.new_request(req(1, kMB), {path({0})}, 0.0);
    man.new_request(req(2, 5 * kMB), {path({0})}, 0.0);
    CHECK(man.remove_request(1, 0.008) == std::vector<ControlMessage>{cts(2, path({0}), 5 * kMB)});
  }
  SUBCASE("two stopped flows compete; the smaller one wins") {
    Manager man(std::vector<double>(3, kRate));
    man.new_request(req(1, kMB), {path({0})}, 0.0);
    man.new_request(req(2, 6 * kMB), {path({0, 1})}, 0.0);
    man.new_request(req(3, 4 * kMB), {path({0, 2})}, 0.0);
    const auto msgs = man.remove_request(1, 0.008);
    CHECK(msgs == std::vector<ControlMessage>{cts(3, path({0, 2}), 4 * kMB)});
    CHECK(man.flow(2).state == FlowState::stopped);
  }
  SUBCASE("reschedule with nothing stopped emits nothing") {
    Manager man(std::vector<double>(2, kRate));
    CHECK(man.reschedule().empty());
  }
}

TEST_CASE("remaining size follows permitted time at line rate") {
  Manager man(std::vector<double>(3, kRate));
  man.new_request(req(1, 10 * kMB), {path({0})}, 0.0);
  CHECK(man.update_remaining(1, 0.04) == 5 * kMB);

  man.new_request(req(2, 20 * kMB), {path({0})}, 0.04);
  CHECK(man.flow(2).state == FlowState::stopped);
  CHECK(man.update_remaining(2, 0.08) == 20 * kMB);

  // stop and resume: 8ms granted, preempted for 8ms, then 8ms more
  Manager m2(std::vector<double>(3, kRate));
  m2.new_request(req(1, 10 * kMB), {path({0})}, 0.0);
  m2.new_request(req(2, kMB), {path({0})}, 0.008);
  CHECK(m2.flow(1).state == FlowState::stopped);
  CHECK(m2.flow(1).remaining == 9 * kMB);
  m2.remove_request(2, 0.016);
  CHECK(m2.flow(1).state == FlowState::permitted);
  CHECK(m2.update_remaining(1, 0.024) == 8 * kMB);
  CHECK(m2.flow(1).grant_times == std::vector<double>{0.0, 0.016});
  CHECK(m2.flow(1).stop_times == std::vector<double>{0.008});
}

TEST_CASE("heterogeneous links: minimal preemption set within the work bound") {
  // links 0 and 1 carry two line-rate flows each
  Manager man(std::vector<double>{2 * kRate, 2 * kRate, kRate, kRate, kRate, kRate, kRate});
  man.new_request(req(1, 8 * kMB), {path({0, 1})}, 0.0);
  man.new_request(req(2, 9 * kMB), {path({0, 5})}, 0.0);
  man.new_request(req(3, 7 * kMB), {path({1, 6})}, 0.0);
  const Flow f = probe(4, 2 * kMB);
  const Path p = path({0, 1});
  const PathEvaluation e = man.evaluate_path(f, p);
  CHECK(e.feasible);
  CHECK(e.preempt_list == std::vector<FlowId>{1});
  CHECK(e.evaluations <= 4);  // (M/S)^l = 2^2

  const Path one[] = {p};
  const FindPathResult r = man.find_path(f, one);
  CHECK(r.evaluation_bound == 4);
  CHECK(r.evaluations <= r.evaluation_bound);
  CHECK(man.stats().bound_violations == 0);
}

TEST_CASE("identical state, request and seed give identical messages") {
  const auto play = [](std::uint64_t seed) {
    Manager man(std::vector<double>(16, kRate), {AdmissionRule::min_cost, seed});
    std::vector<ControlMessage> all;
    std::mt19937_64 rng(3);
    std::vector<Path> paths{path({0, 4}), path({1, 5}), path({2, 6}), path({3, 7})};
    for (FlowId id = 1; id <= 40; ++id) {
      const double t = 0.001 * static_cast<double>(id);
      auto m = man.new_request(req(id, static_cast<Bytes>(1 + rng() % 20) * kMB, t), paths, t);
      all.insert(all.end(), m.begin(), m.end());
      if (id % 3 == 0) {
        for (FlowId g : std::vector<FlowId>(man.flow_list().begin(), man.flow_list().end()))
          if (man.flow(g).state == FlowState::permitted) {
            auto r = man.remove_request(g, t);
            all.insert(all.end(), r.begin(), r.end());
            break;
          }
      }
      REQUIRE(man.check_invariants());
    }
    return all;
  };
  CHECK(play(5) == play(5));
  CHECK(play(5) != play(6));
}

TEST_CASE("random small instances: the chosen mode minimizes brute-force total FCT") {
  std::mt19937_64 rng(2024);
  int preempting = 0;
  int waiting = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int npaths = 1 + static_cast<int>(rng() % 3);
    const std::int64_t p_new = 1 + static_cast<std::int64_t>(rng() % 20);
    std::vector<std::vector<LinkId>> path_links;
    std::vector<oracle::ChainJob> jobs;
    Manager man(std::vector<double>(64, kRate));
    LinkId next_link = 0;
    FlowId next_id = 1;
    int flows = 0;
    for (int p = 0; p < npaths; ++p) {
      const int hops = 2 + static_cast<int>(rng() % 2);
      std::vector<LinkId> links;
      for (int h = 0; h < hops; ++h) links.push_back(next_link++);
      path_links.push_back(links);
      for (LinkId l : links) {
        if (flows >= 6 || rng() % 3 == 0) continue;
        const Bytes size = p_new + 1 + static_cast<Bytes>(rng() % 40);
        man.new_request(req(next_id++, size), {path({l, 40 + flows})}, 0.0);
        jobs.push_back({{l}, size});
        ++flows;
      }
    }
    std::vector<Path> candidates;
    for (const auto& links : path_links) candidates.push_back(path(links));
    const auto msgs = man.new_request(req(100, p_new), candidates, 0.0);
    const bool admitted = msgs.back().kind == ControlKind::cts && msgs.back().flow == 100;

    // brute force both modes on every path
    std::int64_t best_wait = std::numeric_limits<std::int64_t>::max();
    std::int64_t best_preempt = best_wait;
    for (const auto& links : path_links) {
      auto all = jobs;
      all.push_back({std::vector<int>(links.begin(), links.end()), p_new});
      std::vector<int> last(all.size());
      std::iota(last.begin(), last.end(), 0);
      std::vector<int> first{static_cast<int>(all.size()) - 1};
      for (int i = 0; i + 1 < static_cast<int>(all.size()); ++i) first.push_back(i);
      best_wait = std::min(best_wait, oracle::total(oracle::priority_schedule(all, last)));
      best_preempt = std::min(best_preempt, oracle::total(oracle::priority_schedule(all, first)));
    }
    if (admitted) {
      ++preempting;
      CHECK(best_preempt <= best_wait);
      // the granted path is one of the cheapest preemptive choices
      auto all = jobs;
      const Path& granted = *msgs.back().path;
      all.push_back({std::vector<int>(granted.links.begin(), granted.links.end()), p_new});
      std::vector<int> first{static_cast<int>(all.size()) - 1};
      for (int i = 0; i + 1 < static_cast<int>(all.size()); ++i) first.push_back(i);
      CHECK(oracle::total(oracle::priority_schedule(all, first)) == best_preempt);
    } else {
      ++waiting;
      CHECK(best_wait <= best_preempt);
    }
  }
  CHECK(preempting > 20);
  CHECK(waiting > 20);
}
