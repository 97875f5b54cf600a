#include "hyline/man.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace hyline {

namespace {

constexpr double kRateSlack = 1e-9;

/// Whole bytes sent at `rate_bps` over `seconds`; the small bias absorbs
/// binary rounding of exact products such as 0.008 s * 1 Gb/s.
Bytes bytes_sent(double seconds, double rate_bps) {
  return static_cast<Bytes>(std::floor(std::max(0.0, seconds) * rate_bps / 8.0 + 1e-6));
}

bool fits(double free_bps, double rate_bps) {
  return free_bps + kRateSlack * rate_bps >= rate_bps;
}

}  // namespace

std::string_view to_string(ControlKind k) {
  switch (k) {
    case ControlKind::rts: return "RTS";
    case ControlKind::cts: return "CTS";
    case ControlKind::sts: return "STS";
    case ControlKind::fin: return "FIN";
  }
  return "?";
}

Bytes path_cost_no_preempt(const PathEvaluation& eval) { return eval.max_conflict_remaining; }

Bytes path_cost_preempt(const PathEvaluation& eval, const Flow& new_flow) {
  return static_cast<Bytes>(eval.n_preempt) * new_flow.remaining;
}

Manager::Manager(std::vector<double> link_capacity_bps, ManOptions opts)
    : capacity_(std::move(link_capacity_bps)),
      opts_(opts),
      rng_(opts.seed),
      occupancy_(capacity_.size()) {
  for (double c : capacity_)
    if (!(c > 0.0)) throw std::invalid_argument("Manager: link capacity must be positive");
}

const Flow& Manager::flow(FlowId id) const {
  auto it = flows_.find(id);
  if (it == flows_.end()) throw std::out_of_range("Manager: unknown flow " + std::to_string(id));
  return it->second;
}

Flow& Manager::mut(FlowId id) {
  auto it = flows_.find(id);
  if (it == flows_.end()) throw std::out_of_range("Manager: unknown flow " + std::to_string(id));
  return it->second;
}

Bytes Manager::remaining_at(const Flow& f, double now) const {
  Bytes served = f.served_closed;
  if (f.state == FlowState::permitted) {
    const double since = permitted_since_.at(f.id);
    served += bytes_sent(now - since, f.line_rate_bps);
  }
  return std::max<Bytes>(0, f.size - served);
}

void Manager::close_interval(Flow& f) {
  const double since = permitted_since_.at(f.id);
  f.served_closed += bytes_sent(now_ - since, f.line_rate_bps);
  f.served_closed = std::min(f.served_closed, f.size);
  f.remaining = f.size - f.served_closed;
  permitted_since_.erase(f.id);
}

void Manager::sort_list() {
  std::sort(flow_list_.begin(), flow_list_.end(), [this](FlowId a, FlowId b) {
    const Bytes ra = flows_.at(a).remaining;
    const Bytes rb = flows_.at(b).remaining;
    return ra != rb ? ra < rb : a < b;
  });
}

void Manager::advance(double now) {
  now_ = std::max(now_, now);
  for (auto& [id, f] : flows_)
    if (f.state == FlowState::permitted) f.remaining = remaining_at(f, now_);
  sort_list();
}

Bytes Manager::update_remaining(FlowId id, double now) {
  now_ = std::max(now_, now);
  Flow& f = mut(id);
  const Bytes before = f.remaining;
  f.remaining = remaining_at(f, now_);
  if (f.remaining != before) sort_list();
  return f.remaining;
}

void Manager::occupy(Flow& f, const Path& p) {
  for (LinkId l : p.links) occupancy_.at(static_cast<std::size_t>(l)).push_back(f.id);
  f.path = p;
}

void Manager::release(Flow& f) {
  if (!f.path) return;
  for (LinkId l : f.path->links) {
    auto& occ = occupancy_.at(static_cast<std::size_t>(l));
    occ.erase(std::remove(occ.begin(), occ.end(), f.id), occ.end());
  }
  f.path.reset();
}

std::int64_t Manager::path_bound(const Path& p, double rate_bps) const {
  // (M/S)^l with M the widest link on the path and S the flow's line rate
  double widest = 0.0;
  for (LinkId l : p.links) widest = std::max(widest, capacity(l));
  const auto per_link =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(widest / rate_bps + 1e-9)));
  std::int64_t bound = 1;
  for (std::size_t i = 0; i < p.hops(); ++i) {
    if (bound > std::numeric_limits<std::int64_t>::max() / per_link)
      return std::numeric_limits<std::int64_t>::max();
    bound *= per_link;
  }
  return bound;
}

PathEvaluation Manager::evaluate_path(const Flow& f, const Path& p) {
  PathEvaluation ev;
  ev.path = p;
  ev.remaining_bw = std::numeric_limits<double>::infinity();

  const std::size_t hops = p.hops();
  std::vector<double> free(hops);
  // Preemptable occupants per link, lowest priority (largest remaining) first.
  std::vector<std::vector<FlowId>> preemptable(hops);
  for (std::size_t i = 0; i < hops; ++i) {
    const LinkId l = p.links[i];
    double used = 0.0;
    for (FlowId o : occupants(l)) used += flow(o).line_rate_bps;
    free[i] = capacity(l) - used;
    ev.remaining_bw = std::min(ev.remaining_bw, free[i]);
    if (fits(free[i], f.line_rate_bps)) continue;
    for (FlowId o : occupants(l)) {
      const Flow& g = flow(o);
      ev.max_conflict_remaining = std::max(ev.max_conflict_remaining, g.remaining);
      if (g.remaining > f.remaining) preemptable[i].push_back(o);
    }
    std::sort(preemptable[i].begin(), preemptable[i].end(), [this](FlowId a, FlowId b) {
      const Bytes ra = flow(a).remaining;
      const Bytes rb = flow(b).remaining;
      return ra != rb ? ra > rb : a < b;
    });
  }
  if (hops == 0) ev.remaining_bw = 0.0;

  std::vector<FlowId> chosen;
  std::vector<FlowId> best;
  bool have_best = false;

  const auto freed_on = [&](std::size_t i) {
    double freed = 0.0;
    for (FlowId c : chosen)
      if (flow(c).path && flow(c).path->contains(p.links[i])) freed += flow(c).line_rate_bps;
    return freed;
  };

  // Depth-first over overloaded links; at each one pick a further flow to
  // preempt. Candidates on one link are taken in index order so a set is
  // never enumerated twice through permutations.
  auto dfs = [&](auto&& self, std::size_t i, std::size_t min_cand) -> void {
    while (i < hops && fits(free[i] + freed_on(i), f.line_rate_bps)) {
      ++i;
      min_cand = 0;
    }
    if (i == hops) {
      ++ev.evaluations;
      if (!have_best || chosen.size() < best.size()) {
        best = chosen;
        have_best = true;
      }
      return;
    }
    const auto& cands = preemptable[i];
    bool branched = false;
    for (std::size_t c = min_cand; c < cands.size(); ++c) {
      if (std::find(chosen.begin(), chosen.end(), cands[c]) != chosen.end()) continue;
      if (have_best && chosen.size() + 1 >= best.size()) break;
      branched = true;
      chosen.push_back(cands[c]);
      self(self, i, c + 1);
      chosen.pop_back();
    }
    if (!branched && !have_best) ++ev.evaluations;  // dead end: this link cannot be cleared
  };
  dfs(dfs, 0, 0);

  if (have_best) {
    ev.feasible = true;
    std::sort(best.begin(), best.end());
    ev.preempt_list = std::move(best);
    ev.n_preempt = static_cast<int>(ev.preempt_list.size());
  }
  stats_.evaluations += ev.evaluations;
  return ev;
}

FindPathResult Manager::find_path(const Flow& f, std::span<const Path> paths) {
  ++stats_.find_path_calls;
  FindPathResult r;
  if (paths.empty()) return r;

  Bytes min_max_prio = std::numeric_limits<Bytes>::max();
  Bytes best_mnp = std::numeric_limits<Bytes>::max();
  double best_bw = -std::numeric_limits<double>::infinity();
  std::vector<PathEvaluation> ties;

  for (const Path& p : paths) {
    PathEvaluation ev = evaluate_path(f, p);
    r.evaluations += ev.evaluations;
    r.evaluation_bound += path_bound(p, f.line_rate_bps);
    min_max_prio = std::min(min_max_prio, path_cost_no_preempt(ev));
    if (!ev.feasible) continue;
    const Bytes mnp = path_cost_preempt(ev, f);
    if (mnp < best_mnp || (mnp == best_mnp && ev.remaining_bw > best_bw)) {
      ties.clear();
      best_mnp = mnp;
      best_bw = ev.remaining_bw;
      ties.push_back(std::move(ev));
    } else if (mnp == best_mnp && ev.remaining_bw == best_bw) {
      ties.push_back(std::move(ev));
    }
  }
  if (r.evaluations > r.evaluation_bound) ++stats_.bound_violations;
  r.min_max_prio = min_max_prio;
  if (ties.empty()) return r;

  r.any_feasible = true;
  const std::size_t pick = ties.size() == 1 ? 0 : static_cast<std::size_t>(rng_() % ties.size());
  PathEvaluation& chosen = ties[pick];
  r.mnp = best_mnp;
  const bool admissible = opts_.rule == AdmissionRule::always_preempt ||
                          chosen.n_preempt == 0 || best_mnp < min_max_prio;
  if (!admissible) return r;
  r.found = true;
  r.path = std::move(chosen.path);
  r.preempt_list = std::move(chosen.preempt_list);
  return r;
}

void Manager::apply_admission(Flow& f, const FindPathResult& r, std::vector<ControlMessage>& out,
                              std::vector<FlowId>& newly_stopped) {
  for (FlowId gid : r.preempt_list) {
    Flow& g = mut(gid);
    if (g.remaining <= f.remaining) ++stats_.illegal_preemptions;
    close_interval(g);
    release(g);
    g.state = FlowState::stopped;
    g.stop_times.push_back(now_);
    out.push_back({ControlKind::sts, g.id, g.src, std::nullopt, g.remaining});
    newly_stopped.push_back(g.id);
    ++stats_.preemptions;
  }
  occupy(f, *r.path);
  f.state = FlowState::permitted;
  f.grant_times.push_back(now_);
  permitted_since_[f.id] = now_;
  out.push_back({ControlKind::cts, f.id, f.src, f.path, f.remaining});
  ++stats_.admissions;
}

std::vector<ControlMessage> Manager::new_request(const FlowRequest& req,
                                                 std::vector<Path> candidates, double now) {
  if (contains(req.id))
    throw std::invalid_argument("Manager: duplicate flow id " + std::to_string(req.id));
  if (req.size <= 0) throw std::invalid_argument("Manager: flow size must be positive");
  if (!(req.line_rate_bps > 0.0)) throw std::invalid_argument("Manager: line rate must be positive");
  advance(now);
  ++stats_.requests;

  Flow f;
  f.id = req.id;
  f.src = req.src;
  f.dst = req.dst;
  f.size = req.size;
  f.remaining = req.size;
  f.arrival_time = req.arrival_time;
  f.line_rate_bps = req.line_rate_bps;
  f.candidates = std::move(candidates);
  flows_.emplace(f.id, std::move(f));
  const FlowId id = req.id;
  const Bytes rem = req.size;
  auto pos = std::lower_bound(flow_list_.begin(), flow_list_.end(), id, [&](FlowId a, FlowId) {
    const Bytes ra = flows_.at(a).remaining;
    return ra != rem ? ra < rem : a < id;
  });
  flow_list_.insert(pos, id);
  stats_.max_active = std::max<std::int64_t>(stats_.max_active, static_cast<std::int64_t>(flow_list_.size()));
  return schedule(id);
}

std::vector<ControlMessage> Manager::remove_request(FlowId id, double now) {
  if (!contains(id)) throw std::out_of_range("Manager: unknown flow " + std::to_string(id));
  advance(now);
  ++stats_.removals;
  Flow& f = mut(id);
  if (f.state == FlowState::permitted) close_interval(f);
  release(f);
  f.state = FlowState::finished;
  flow_list_.erase(std::remove(flow_list_.begin(), flow_list_.end(), id), flow_list_.end());
  flows_.erase(id);
  return reschedule();
}

void Manager::reschedule_pass(std::set<FlowId> skip, std::vector<ControlMessage>& out) {
  ++stats_.reschedule_passes;
  // Single pass over a snapshot of the priority order; flows stopped during
  // the pass (or just before it) are not retried.
  const std::vector<FlowId> snapshot = flow_list_;
  for (FlowId id : snapshot) {
    if (skip.count(id) || !contains(id)) continue;
    Flow& g = mut(id);
    if (g.state != FlowState::stopped) continue;
    ++stats_.reschedule_visits;
    const FindPathResult r = find_path(g, g.candidates);
    if (!r.found) continue;
    std::vector<FlowId> stopped_now;
    apply_admission(g, r, out, stopped_now);
    skip.insert(stopped_now.begin(), stopped_now.end());
  }
}

std::vector<ControlMessage> Manager::schedule(FlowId id) {
  std::vector<ControlMessage> out;
  Flow& f = mut(id);
  if (f.state != FlowState::requested && f.state != FlowState::stopped)
    throw std::logic_error("Manager::schedule: flow is not waiting");
  const bool fresh = f.state == FlowState::requested;
  const std::int64_t before = stats_.evaluations;
  const FindPathResult r = find_path(f, f.candidates);
  if (fresh) stats_.request_evaluations += stats_.evaluations - before;

  if (!r.found) {
    f.state = FlowState::stopped;
    out.push_back({ControlKind::sts, f.id, f.src, std::nullopt, f.remaining});
    ++stats_.rejections;
    return out;
  }
  std::vector<FlowId> newly_stopped;
  apply_admission(f, r, out, newly_stopped);
  // flows preempted for f count as stopped only after this pass
  reschedule_pass({newly_stopped.begin(), newly_stopped.end()}, out);
  return out;
}

std::vector<ControlMessage> Manager::reschedule() {
  std::vector<ControlMessage> out;
  reschedule_pass({}, out);
  return out;
}

bool Manager::check_invariants(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (std::size_t l = 0; l < occupancy_.size(); ++l) {
    double used = 0.0;
    for (FlowId o : occupancy_[l]) {
      const Flow& g = flow(o);
      if (g.state != FlowState::permitted || !g.path || !g.path->contains(static_cast<LinkId>(l)))
        return fail("link " + std::to_string(l) + " lists flow " + std::to_string(o) +
                    " which is not permitted on it");
      used += g.line_rate_bps;
    }
    if (used > capacity_[l] * (1.0 + kRateSlack))
      return fail("link " + std::to_string(l) + " over capacity");
  }
  for (const auto& [id, f] : flows_) {
    if ((f.state == FlowState::permitted) != f.path.has_value())
      return fail("flow " + std::to_string(id) + " path/state mismatch");
    if (f.path)
      for (LinkId l : f.path->links) {
        const auto& occ = occupancy_.at(static_cast<std::size_t>(l));
        if (std::count(occ.begin(), occ.end(), id) != 1)
          return fail("flow " + std::to_string(id) + " missing from link " + std::to_string(l));
      }
    if (f.remaining < 0 || f.remaining > f.size)
      return fail("flow " + std::to_string(id) + " remaining out of range");
  }
  for (std::size_t i = 1; i < flow_list_.size(); ++i) {
    const Flow& a = flow(flow_list_[i - 1]);
    const Flow& b = flow(flow_list_[i]);
    if (a.remaining > b.remaining || (a.remaining == b.remaining && a.id > b.id))
      return fail("flow list out of order");
  }
  return true;
}

}  // namespace hyline
