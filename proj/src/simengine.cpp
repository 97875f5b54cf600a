#include "hyline/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "hyline/baselines.hpp"

namespace hyline {

std::string_view to_string(SchedulerMode m) {
  switch (m) {
    case SchedulerMode::hyline: return "hyline";
    case SchedulerMode::baseline_fair: return "baseline_fair";
    case SchedulerMode::baseline_srpt: return "baseline_srpt";
  }
  return "?";
}

namespace {

using Ns = std::int64_t;
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

Ns to_ns(double s) { return std::llround(s * 1e9); }
double to_s(Ns t) { return static_cast<double>(t) * 1e-9; }

enum class Ev : std::uint8_t {
  flow_arrival,
  nic_tx_done,
  port_tx_done,
  packet_arrive,
  ack_arrive,
  to_man,
  to_host,
  pause_apply,
  rto,
};

struct Event {
  Ns t;
  std::uint64_t seq;
  Ev kind;
  std::uint32_t a;
  std::int64_t b;
  std::int64_t c;
};

struct EventLater {
  bool operator()(const Event& x, const Event& y) const {
    return x.t != y.t ? x.t > y.t : x.seq > y.seq;
  }
};

struct Packet {
  std::uint32_t flow;
  std::uint32_t path;
  std::int32_t seq;
  std::uint16_t hop;
  std::uint16_t bytes;
  FlowClass cls;
  bool retx;
  Ns sent;
  LinkId in_link;
};

/// Output port of a switch onto one link.
struct Port {
  std::deque<std::uint32_t> q[2];  // [0] class 1, [1] class 2
  int occupancy = 0;
  Ns busy_until = 0;
  bool tx_pending = false;
  std::vector<std::pair<LinkId, int>> class2_from;  // queued class-2 packets per ingress
  std::vector<LinkId> pausing;                      // ingress links this port holds paused
};

enum class HostState : std::uint8_t { active, waiting, permitted, stopped, fin_sent };

struct SimFlow {
  FlowId id = 0;
  HostId src = 0;
  HostId dst = 0;
  Bytes size = 0;
  FlowClass cls = FlowClass::first;
  std::int32_t npkts = 0;
  std::uint32_t path = kNone;
  HostState state = HostState::active;

  // sender
  std::int32_t snd_una = 0;
  std::int32_t snd_nxt = 0;
  std::int32_t max_sent = 0;
  std::int32_t retx_seq = -1;
  double cwnd = 0.0;
  double ssthresh = 0.0;
  int dupacks = 0;
  bool recovery = false;
  std::int32_t recover = 0;
  double srtt = -1.0;  // ns
  double rttvar = 0.0;
  Ns rto = 0;
  Ns min_rto = 0;
  int backoff = 1;
  Ns rto_deadline = 0;  // 0 = disarmed
  bool timer_pending = false;
  bool hold = false;  // new data waits for old-path packets to drain
  Bytes sent_bytes = 0;

  // receiver
  std::vector<bool> got;
  std::int32_t expected = 0;
  Bytes delivered = 0;
  std::int32_t highest_first = -1;
  bool finished = false;

  // record
  Ns arrival = 0;
  Ns start = -1;
  Ns finish = -1;
  Ns first_grant = -1;
  Ns last_stop = -1;
  Ns stopped_total = 0;
  std::int64_t retx = 0;
  std::int64_t preemptions = 0;
};

struct HostNic {
  LinkId uplink = -1;
  Ns busy_until = 0;
  bool tx_pending = false;
  std::vector<std::uint32_t> c1;
  std::size_t rr = 0;
  std::vector<std::uint32_t> c2;
};

struct InternedPath {
  Path path;
  Ns ack_delay;
};

class Simulator {
 public:
  Simulator(const Topology& topo, const FlowTrace& trace, const SimParams& p)
      : topo_(topo),
        p_(p),
        man_(link_capacities(topo), ManOptions{p.admission, p.seed}) {
    validate();
    ports_.resize(topo.links().size());
    link_paused_.assign(topo.links().size(), 0);
    holder_.assign(topo.links().size(), kNone);
    hosts_.resize(static_cast<std::size_t>(topo.host_count()));
    for (int h = 0; h < topo.host_count(); ++h)
      hosts_[static_cast<std::size_t>(h)].uplink = topo.outbound(h).front();
    ser_ns_per_byte_.reserve(topo.links().size());
    for (const Link& l : topo.links()) {
      ser_ns_per_byte_.push_back(8e9 / l.capacity_bps);
      prop_ns_.push_back(to_ns(l.propagation_delay_s));
    }

    flows_.reserve(trace.size());
    for (const TraceEntry& e : trace) {
      if (!topo.is_host(e.src) || !topo.is_host(e.dst) || e.src == e.dst)
        throw std::invalid_argument("trace flow " + std::to_string(e.id) + " has bad endpoints");
      if (e.bytes <= 0) throw std::invalid_argument("trace flow " + std::to_string(e.id) + " is empty");
      if (!index_.emplace(e.id, static_cast<std::uint32_t>(flows_.size())).second)
        throw std::invalid_argument("trace flow id " + std::to_string(e.id) + " repeated");
      SimFlow f;
      f.id = e.id;
      f.src = e.src;
      f.dst = e.dst;
      f.size = e.bytes;
      f.cls = classify(e.bytes, p.h_bytes);
      f.npkts = static_cast<std::int32_t>((e.bytes + p.packet_bytes - 1) / p.packet_bytes);
      f.arrival = to_ns(e.arrival_s);
      f.cwnd = p.init_window;
      f.ssthresh = p.max_window;
      f.min_rto = to_ns(f.cls == FlowClass::first ? p.minrto_class1_s : p.minrto_class2_s);
      f.rto = f.min_rto;
      flows_.push_back(std::move(f));
      push(flows_.back().arrival, Ev::flow_arrival, static_cast<std::uint32_t>(flows_.size() - 1));
    }
  }

  RunReport run() {
    while (done_ < flows_.size()) {
      if (events_.empty()) throw DeadlockError(deadlock_diagnostic());
      const Event e = events_.top();
      events_.pop();
      now_ = e.t;
      ++counters_.events;
      dispatch(e);
    }
    return report();
  }

 private:
  static std::vector<double> link_capacities(const Topology& topo) {
    std::vector<double> caps;
    for (const Link& l : topo.links()) caps.push_back(l.capacity_bps);
    return caps;
  }

  void validate() const {
    if (p_.packet_bytes <= 0 || p_.packet_bytes > 65535 || p_.ack_bytes <= 0)
      throw std::invalid_argument("packet and ack sizes must be positive");
    if (p_.buffer_pkts <= 0) throw std::invalid_argument("buffer must hold at least one packet");
    if (p_.pfc_enabled && !(p_.resume_pkts < p_.pause_pkts && p_.pause_pkts <= p_.buffer_pkts))
      throw std::invalid_argument("need resume < pause <= buffer");
    if (p_.init_window < 1 || p_.max_window < p_.init_window)
      throw std::invalid_argument("need 1 <= init_window <= max_window");
    if (!(p_.t_cost_s >= 0.0)) throw std::invalid_argument("t_cost must be non-negative");
    if (p_.h_bytes < 0) throw std::invalid_argument("threshold must be non-negative");
  }

  void push(Ns t, Ev kind, std::uint32_t a, std::int64_t b = 0, std::int64_t c = 0) {
    events_.push({t, seq_++, kind, a, b, c});
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case Ev::flow_arrival: on_flow_arrival(e.a); break;
      case Ev::nic_tx_done:
        hosts_[e.a].tx_pending = false;
        nic_try_send(static_cast<HostId>(e.a));
        break;
      case Ev::port_tx_done:
        ports_[e.a].tx_pending = false;
        port_try_send(static_cast<LinkId>(e.a));
        break;
      case Ev::packet_arrive: on_packet_arrive(e.a); break;
      case Ev::ack_arrive: on_ack(e.a, static_cast<std::int32_t>(e.b), e.c); break;
      case Ev::to_man: on_man(e.a, static_cast<ControlKind>(e.b)); break;
      case Ev::to_host: on_host_control(e.a); break;
      case Ev::pause_apply: on_pause_apply(static_cast<LinkId>(e.a), static_cast<int>(e.b)); break;
      case Ev::rto: on_rto(e.a); break;
    }
  }

  std::uint32_t intern(const Path& path) {
    auto [it, inserted] = path_ids_.emplace(path.links, static_cast<std::uint32_t>(paths_.size()));
    if (inserted) {
      Ns ack = 0;
      for (LinkId l : path.links)
        ack += std::llround(p_.ack_bytes * ser_ns_per_byte_[static_cast<std::size_t>(l)]) +
               prop_ns_[static_cast<std::size_t>(l)];
      paths_.push_back({path, ack});
    }
    return it->second;
  }

  Ns ser_ns(LinkId l, int bytes) const {
    return std::llround(bytes * ser_ns_per_byte_[static_cast<std::size_t>(l)]);
  }

  int packet_size(const SimFlow& f, std::int32_t seq) const {
    if (seq == f.npkts - 1) return static_cast<int>(f.size - static_cast<Bytes>(f.npkts - 1) * p_.packet_bytes);
    return p_.packet_bytes;
  }

  // ---- flows and control plane ------------------------------------------

  void on_flow_arrival(std::uint32_t fi) {
    SimFlow& f = flows_[fi];
    f.got.assign(static_cast<std::size_t>(f.npkts), false);
    HostNic& h = hosts_[static_cast<std::size_t>(f.src)];
    if (f.cls == FlowClass::first) {
      const std::vector<Path> paths = topo_.paths(f.src, f.dst);
      const FlowKey key{f.src, f.dst, static_cast<std::uint32_t>(f.id), 80};
      f.path = intern(ecmp_select(key, paths));
      f.state = HostState::active;
      h.c1.push_back(fi);
      nic_try_send(f.src);
    } else {
      f.state = HostState::waiting;
      h.c2.push_back(fi);
      push(now_ + to_ns(p_.t_cost_s / 2), Ev::to_man, fi, static_cast<std::int64_t>(ControlKind::rts));
    }
  }

  void on_man(std::uint32_t fi, ControlKind kind) {
    const SimFlow& f = flows_[fi];
    const double now = to_s(now_);
    std::vector<ControlMessage> msgs;
    if (kind == ControlKind::rts) {
      msgs = man_.new_request({f.id, f.src, f.dst, f.size, uplink_rate(f.src), to_s(f.arrival)},
                              topo_.paths(f.src, f.dst), now);
    } else if (man_.contains(f.id)) {
      msgs = man_.remove_request(f.id, now);
    }
    if (!man_.check_invariants()) ++counters_.occupancy_violations;
    for (ControlMessage& m : msgs) {
      pending_.push_back(std::move(m));
      push(now_ + to_ns(p_.t_cost_s / 2), Ev::to_host, static_cast<std::uint32_t>(pending_.size() - 1));
    }
  }

  double uplink_rate(HostId h) const {
    return topo_.link(hosts_[static_cast<std::size_t>(h)].uplink).capacity_bps;
  }

  void on_host_control(std::uint32_t mi) {
    ControlMessage m = std::move(pending_[mi]);
    pending_[mi] = {};
    const std::uint32_t fi = index_.at(m.flow);
    SimFlow& f = flows_[fi];
    if (p_.record_control_log)
      control_log_.push_back({to_s(now_), m.kind, f.id, f.sent_bytes, m.remaining});
    if (f.finished || f.state == HostState::fin_sent) return;

    if (m.kind == ControlKind::cts) {
      const std::uint32_t pid = intern(*m.path);
      if (f.first_grant < 0) {
        f.first_grant = now_;
      } else if (f.state == HostState::stopped) {
        f.stopped_total += now_ - f.last_stop;
      }
      if (f.path != kNone && f.path != pid && f.snd_una < f.max_sent) f.hold = true;
      f.path = pid;
      f.state = HostState::permitted;
      for (LinkId l : paths_[pid].path.links) {
        std::uint32_t& h = holder_[static_cast<std::size_t>(l)];
        if (h != kNone && h != fi) ++counters_.exclusive_violations;
        h = fi;
      }
      nic_try_send(f.src);
    } else if (m.kind == ControlKind::sts) {
      if (f.state != HostState::permitted) return;
      f.state = HostState::stopped;
      f.last_stop = now_;
      ++f.preemptions;
      release_links(fi);
    }
  }

  void release_links(std::uint32_t fi) {
    const SimFlow& f = flows_[fi];
    if (f.path == kNone) return;
    for (LinkId l : paths_[f.path].path.links) {
      std::uint32_t& h = holder_[static_cast<std::size_t>(l)];
      if (h == fi) h = kNone;
    }
  }

  // ---- sender -----------------------------------------------------------

  bool sendable(const SimFlow& f, bool class2_paused) const {
    if (f.finished) return false;
    if (f.cls == FlowClass::second) {
      if (class2_paused) return false;
      if (f.state == HostState::waiting || f.state == HostState::stopped) return false;
    }
    if (f.retx_seq >= 0) return true;
    if (f.snd_nxt - f.snd_una >= static_cast<std::int32_t>(f.cwnd)) return false;
    if (f.snd_nxt < f.max_sent) return true;
    if (f.snd_nxt >= f.npkts) return false;
    if (f.cls == FlowClass::second) return f.state == HostState::permitted && !f.hold;
    return true;
  }

  void nic_try_send(HostId host) {
    HostNic& h = hosts_[static_cast<std::size_t>(host)];
    if (h.tx_pending || h.busy_until > now_) return;
    std::uint32_t pick = kNone;
    const std::size_t n1 = h.c1.size();
    for (std::size_t i = 0; i < n1; ++i) {
      const std::size_t idx = (h.rr + i) % n1;
      if (sendable(flows_[h.c1[idx]], false)) {
        pick = h.c1[idx];
        h.rr = idx + 1;
        break;
      }
    }
    if (pick == kNone) {
      const bool paused = link_paused_[static_cast<std::size_t>(h.uplink)] > 0;
      for (std::uint32_t fi : h.c2)
        if (sendable(flows_[fi], paused)) {
          pick = fi;
          break;
        }
    }
    if (pick == kNone) return;
    send_packet(pick, h);
    h.tx_pending = true;
    push(h.busy_until, Ev::nic_tx_done, static_cast<std::uint32_t>(host));
  }

  void send_packet(std::uint32_t fi, HostNic& h) {
    SimFlow& f = flows_[fi];
    std::int32_t seq;
    if (f.retx_seq >= 0) {
      seq = f.retx_seq;
      f.retx_seq = -1;
    } else {
      seq = f.snd_nxt++;
    }
    const bool retx = seq < f.max_sent;
    f.max_sent = std::max(f.max_sent, seq + 1);
    const int bytes = packet_size(f, seq);
    if (retx) {
      ++f.retx;
      ++counters_.retransmissions;
    } else {
      f.sent_bytes += bytes;
    }
    if (f.start < 0) f.start = now_;
    ++counters_.packets_sent;

    const std::uint32_t pi = alloc_packet();
    packets_[pi] = {fi, f.path, seq, 0, static_cast<std::uint16_t>(bytes), f.cls, retx, now_, h.uplink};
    const Ns ser = ser_ns(h.uplink, bytes);
    h.busy_until = now_ + ser;
    push(now_ + ser + prop_ns_[static_cast<std::size_t>(h.uplink)], Ev::packet_arrive, pi);
    arm_timer(fi);

    if (f.cls == FlowClass::second && !retx && seq == f.npkts - 1) {
      f.state = HostState::fin_sent;
      release_links(fi);
      push(now_ + to_ns(p_.t_cost_s / 2), Ev::to_man, fi, static_cast<std::int64_t>(ControlKind::fin));
    }
  }

  void arm_timer(std::uint32_t fi) {
    SimFlow& f = flows_[fi];
    if (f.rto_deadline == 0) f.rto_deadline = now_ + f.rto * f.backoff;
    if (!f.timer_pending) {
      f.timer_pending = true;
      push(f.rto_deadline, Ev::rto, fi);
    }
  }

  void on_rto(std::uint32_t fi) {
    SimFlow& f = flows_[fi];
    f.timer_pending = false;
    if (f.finished || f.rto_deadline == 0) return;
    if (now_ < f.rto_deadline) {
      f.timer_pending = true;
      push(f.rto_deadline, Ev::rto, fi);
      return;
    }
    if (f.cls == FlowClass::first)
      ++counters_.timeouts_class1;
    else
      ++counters_.timeouts_class2;
    f.ssthresh = std::max(2.0, (f.snd_nxt - f.snd_una) / 2.0);
    f.cwnd = 1.0;
    f.snd_nxt = f.snd_una;  // go back N
    f.retx_seq = -1;
    f.recovery = false;
    f.dupacks = 0;
    f.backoff = std::min(f.backoff * 2, 64);
    f.rto_deadline = 0;
    arm_timer(fi);
    nic_try_send(f.src);
  }

  void on_ack(std::uint32_t fi, std::int32_t cum, Ns echo) {
    SimFlow& f = flows_[fi];
    if (f.finished) return;
    const double sample = static_cast<double>(now_ - echo);
    if (f.srtt < 0) {
      f.srtt = sample;
      f.rttvar = sample / 2;
    } else {
      f.rttvar = 0.75 * f.rttvar + 0.25 * std::abs(f.srtt - sample);
      f.srtt = 0.875 * f.srtt + 0.125 * sample;
    }
    f.rto = std::max<Ns>(f.min_rto, std::llround(f.srtt + 4 * f.rttvar));

    if (cum > f.snd_una) {
      const std::int32_t acked = cum - f.snd_una;
      f.snd_una = cum;
      if (f.snd_nxt < f.snd_una) f.snd_nxt = f.snd_una;
      f.backoff = 1;
      if (f.recovery) {
        if (cum >= f.recover) {
          f.recovery = false;
          f.cwnd = f.ssthresh;
          f.dupacks = 0;
        } else {
          f.retx_seq = f.snd_una;  // partial ack: next hole
          f.cwnd = std::max(1.0, f.cwnd - acked + 1);
        }
      } else {
        f.dupacks = 0;
        for (std::int32_t i = 0; i < acked; ++i) f.cwnd += f.cwnd < f.ssthresh ? 1.0 : 1.0 / f.cwnd;
        f.cwnd = std::min<double>(f.cwnd, p_.max_window);
      }
      if (f.retx_seq >= 0 && f.retx_seq < f.snd_una) f.retx_seq = -1;
      if (f.hold && f.snd_una >= f.max_sent) f.hold = false;
      f.rto_deadline = f.snd_una < f.max_sent ? now_ + f.rto * f.backoff : 0;
    } else if (cum == f.snd_una && f.snd_una < f.max_sent) {
      ++f.dupacks;
      if (!f.recovery && f.dupacks == p_.dupack_threshold) {
        f.recovery = true;
        f.recover = f.max_sent;
        f.ssthresh = std::max(2.0, (f.snd_nxt - f.snd_una) / 2.0);
        f.cwnd = f.ssthresh + p_.dupack_threshold;
        f.retx_seq = f.snd_una;
      } else if (f.recovery) {
        f.cwnd = std::min<double>(f.cwnd + 1.0, p_.max_window);
      }
    }
    nic_try_send(f.src);
  }

  // ---- fabric -----------------------------------------------------------

  std::uint32_t alloc_packet() {
    if (!free_packets_.empty()) {
      const std::uint32_t i = free_packets_.back();
      free_packets_.pop_back();
      return i;
    }
    packets_.emplace_back();
    return static_cast<std::uint32_t>(packets_.size() - 1);
  }

  void free_packet(std::uint32_t pi) { free_packets_.push_back(pi); }

  void on_packet_arrive(std::uint32_t pi) {
    Packet& pkt = packets_[pi];
    const Path& path = paths_[pkt.path].path;
    const LinkId in = path.links[pkt.hop];
    const NodeId node = topo_.link(in).dst;
    if (topo_.is_host(node)) {
      receive(pi);
      return;
    }
    if (pkt.hop == 0 && p_.drop_hook && p_.drop_hook(flows_[pkt.flow].id, pkt.seq, pkt.retx)) {
      free_packet(pi);
      return;
    }
    ++pkt.hop;
    pkt.in_link = in;
    enqueue(path.links[pkt.hop], pi);
  }

  void enqueue(LinkId out, std::uint32_t pi) {
    Port& port = ports_[static_cast<std::size_t>(out)];
    const Packet& pkt = packets_[pi];
    const bool c2 = pkt.cls == FlowClass::second;
    const bool full = port.occupancy >= p_.buffer_pkts;
    const bool headroom = !c2 && p_.pfc_enabled && port.occupancy >= p_.pause_pkts;
    if (full || headroom) {
      ++(c2 ? counters_.drops_class2 : counters_.drops_class1);
      free_packet(pi);
      return;
    }
    const bool blocked = c2 && link_paused_[static_cast<std::size_t>(out)] > 0;
    if (!port.tx_pending && port.busy_until <= now_ && !blocked && port.q[0].empty() &&
        (c2 ? port.q[1].empty() : true)) {
      transmit(out, port, pi);
      return;
    }
    port.q[c2 ? 1 : 0].push_back(pi);
    ++port.occupancy;
    counters_.max_port_occupancy = std::max<std::int64_t>(counters_.max_port_occupancy, port.occupancy);
    if (port.occupancy > p_.buffer_pkts) ++counters_.buffer_violations;
    if (c2) bump_ingress(port, pkt.in_link, +1);
    if (p_.pfc_enabled && port.occupancy >= p_.pause_pkts) {
      for (const auto& [in, count] : port.class2_from)
        if (count > 0) assert_pause(port, in);
    }
    port_try_send(out);
  }

  static void bump_ingress(Port& port, LinkId in, int delta) {
    for (auto& [l, count] : port.class2_from)
      if (l == in) {
        count += delta;
        return;
      }
    port.class2_from.emplace_back(in, delta);
  }

  void assert_pause(Port& port, LinkId in) {
    if (std::find(port.pausing.begin(), port.pausing.end(), in) != port.pausing.end()) return;
    port.pausing.push_back(in);
    ++counters_.pause_events;
    push(now_ + prop_ns_[static_cast<std::size_t>(in)], Ev::pause_apply, static_cast<std::uint32_t>(in), +1);
  }

  void on_pause_apply(LinkId l, int delta) {
    int& paused = link_paused_[static_cast<std::size_t>(l)];
    paused += delta;
    if (paused != 0) return;
    const NodeId up = topo_.link(l).src;
    if (topo_.is_host(up))
      nic_try_send(static_cast<HostId>(up));
    else
      port_try_send(l);
  }

  void port_try_send(LinkId out) {
    Port& port = ports_[static_cast<std::size_t>(out)];
    const bool c2_ok = link_paused_[static_cast<std::size_t>(out)] == 0 && !port.q[1].empty();
    const bool work = !port.q[0].empty() || c2_ok;
    if (!work || port.tx_pending) return;
    if (port.busy_until > now_) {
      port.tx_pending = true;
      push(port.busy_until, Ev::port_tx_done, static_cast<std::uint32_t>(out));
      return;
    }
    const int cls = port.q[0].empty() ? 1 : 0;
    const std::uint32_t pi = port.q[cls].front();
    port.q[cls].pop_front();
    --port.occupancy;
    if (cls == 1) {
      if (!port.q[0].empty()) ++counters_.priority_violations;
      bump_ingress(port, packets_[pi].in_link, -1);
    }
    transmit(out, port, pi);
    if (p_.pfc_enabled && !port.pausing.empty() && port.occupancy <= p_.resume_pkts) {
      for (LinkId in : port.pausing) {
        push(now_ + prop_ns_[static_cast<std::size_t>(in)], Ev::pause_apply, static_cast<std::uint32_t>(in), -1);
        ++counters_.resume_events;
      }
      port.pausing.clear();
    }
    const bool more = !port.q[0].empty() ||
                      (!port.q[1].empty() && link_paused_[static_cast<std::size_t>(out)] == 0);
    if (more) {
      port.tx_pending = true;
      push(port.busy_until, Ev::port_tx_done, static_cast<std::uint32_t>(out));
    }
  }

  void transmit(LinkId out, Port& port, std::uint32_t pi) {
    const Ns ser = ser_ns(out, packets_[pi].bytes);
    port.busy_until = now_ + ser;
    push(now_ + ser + prop_ns_[static_cast<std::size_t>(out)], Ev::packet_arrive, pi);
  }

  void receive(std::uint32_t pi) {
    const Packet pkt = packets_[pi];
    free_packet(pi);
    SimFlow& f = flows_[pkt.flow];
    if (f.finished) return;
    const auto s = static_cast<std::size_t>(pkt.seq);
    if (!f.got[s]) {
      f.got[s] = true;
      f.delivered += pkt.bytes;
      while (f.expected < f.npkts && f.got[static_cast<std::size_t>(f.expected)]) ++f.expected;
    } else {
      ++duplicate_deliveries_;
    }
    if (f.cls == FlowClass::second && !pkt.retx) {
      if (pkt.seq < f.highest_first) ++counters_.reorder_violations;
      f.highest_first = std::max(f.highest_first, pkt.seq);
    }
    if (f.expected == f.npkts) {
      finish(pkt.flow);
      return;
    }
    push(now_ + paths_[pkt.path].ack_delay, Ev::ack_arrive, pkt.flow, f.expected, pkt.sent);
  }

  void finish(std::uint32_t fi) {
    SimFlow& f = flows_[fi];
    f.finished = true;
    f.finish = now_;
    if (f.delivered != f.size) ++counters_.conservation_violations;
    std::vector<bool>().swap(f.got);
    HostNic& h = hosts_[static_cast<std::size_t>(f.src)];
    auto& list = f.cls == FlowClass::first ? h.c1 : h.c2;
    list.erase(std::find(list.begin(), list.end(), fi));
    if (f.state == HostState::permitted) release_links(fi);
    ++done_;
  }

  std::string deadlock_diagnostic() const {
    std::ostringstream os;
    os << "event queue drained at t=" << to_s(now_) << "s with " << flows_.size() - done_
       << " unfinished flows;";
    int shown = 0;
    for (const SimFlow& f : flows_) {
      if (f.finished) continue;
      os << " flow " << f.id << " (class " << to_string(f.cls) << ", state "
         << static_cast<int>(f.state) << ", acked " << f.snd_una << "/" << f.npkts << ")";
      if (++shown == 5) break;
    }
    return os.str();
  }

  RunReport report() const {
    RunReport r;
    r.scheme = std::string(to_string(SchedulerMode::hyline));
    r.flows.reserve(flows_.size());
    for (const SimFlow& f : flows_) {
      FlowRecord rec;
      rec.id = f.id;
      rec.cls = f.cls;
      rec.bytes = f.size;
      rec.arrival_s = to_s(f.arrival);
      rec.start_s = to_s(f.start);
      rec.finish_s = to_s(f.finish);
      rec.path_len = f.path == kNone ? 0 : static_cast<int>(paths_[f.path].path.hops());
      rec.retx = f.retx;
      rec.preemptions = f.preemptions;
      rec.wait_s = f.cls == FlowClass::second ? to_s(f.first_grant - f.arrival) : 0.0;
      rec.stopped_s = to_s(f.stopped_total);
      r.flows.push_back(rec);
    }
    std::sort(r.flows.begin(), r.flows.end(),
              [](const FlowRecord& a, const FlowRecord& b) { return a.id < b.id; });
    r.counters = counters_;
    r.counters.duplicate_deliveries = duplicate_deliveries_;
    r.man = man_.stats();
    r.counters.preemption_violations += r.man.illegal_preemptions;
    r.sim_end_s = to_s(now_);
    r.control_log = control_log_;
    return r;
  }

  const Topology& topo_;
  const SimParams& p_;
  Manager man_;

  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t seq_ = 0;
  Ns now_ = 0;

  std::vector<double> ser_ns_per_byte_;
  std::vector<Ns> prop_ns_;
  std::vector<Port> ports_;
  std::vector<int> link_paused_;
  std::vector<std::uint32_t> holder_;  // host-side granted class-2 flow per link
  std::vector<HostNic> hosts_;

  std::vector<SimFlow> flows_;
  std::unordered_map<FlowId, std::uint32_t> index_;
  std::size_t done_ = 0;

  std::vector<Packet> packets_;
  std::vector<std::uint32_t> free_packets_;

  std::map<std::vector<LinkId>, std::uint32_t> path_ids_;
  std::deque<InternedPath> paths_;

  std::vector<ControlMessage> pending_;
  std::vector<ControlLogEntry> control_log_;
  RunCounters counters_;
  std::int64_t duplicate_deliveries_ = 0;
};

}  // namespace

RunReport run(const Topology& topo, const FlowTrace& trace, SchedulerMode mode,
              const SimParams& params) {
  if (mode == SchedulerMode::hyline) return Simulator(topo, trace, params).run();
  FluidOptions opts;
  opts.add_path_latency = params.baseline_path_latency;
  opts.packet_bytes = params.packet_bytes;
  opts.h_bytes = params.h_bytes;
  RunReport r = fluid_run(trace, topo,
                          mode == SchedulerMode::baseline_fair ? FluidPolicy::maxmin : FluidPolicy::srpt,
                          opts);
  r.scheme = std::string(to_string(mode));
  return r;
}

}  // namespace hyline
