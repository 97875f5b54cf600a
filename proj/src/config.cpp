#include "hyline/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hyline {

using nlohmann::json;

namespace {

/// Reads one JSON object, remembering which keys were consumed so the
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name(key) + " has the wrong type: " + j_.at(key).dump());
    }
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    T v{};
    read(key, v);
    out = v;
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, name(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown config key " + name(it.key()));
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;  // bare strings

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "hyline") return {SchedulerMode::hyline, true};
  if (name == "hyline_nopfc") return {SchedulerMode::hyline, false};
  if (name == "baseline_fair") return {SchedulerMode::baseline_fair, true};
  if (name == "baseline_srpt") return {SchedulerMode::baseline_srpt, true};
  throw ConfigError("unknown scheme '" + name +
                    "' (expected hyline, hyline_nopfc, baseline_fair or baseline_srpt)");
}

ExperimentConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides,
                              const std::filesystem::path& base_dir) {
  json root = json::parse(json_text, nullptr, false, true);
  if (root.is_discarded()) throw ConfigError("config is not valid JSON");
  if (root.is_null()) root = json::object();
  for (const std::string& o : overrides) apply_override(root, o);

  ExperimentConfig c;
  c.base_dir = base_dir;
  Section top(root, "");

  Section t = top.child("topology");
  t.read("k", c.topology.k);
  t.read("hosts_per_edge", c.topology.hosts_per_edge);
  t.read("link_gbps", c.topology.link_gbps);
  t.read("rtt_us", c.topology.rtt_us);
  t.finish();
  require(c.topology.k >= 4 && c.topology.k % 2 == 0, "topology.k must be an even integer >= 4");
  require(c.topology.hosts_per_edge >= 1, "topology.hosts_per_edge must be >= 1");
  require(c.topology.link_gbps > 0.0, "topology.link_gbps must be positive");
  require(c.topology.rtt_us > 0.0, "topology.rtt_us must be positive");

  Section h = top.child("hyline");
  h.read("h_bytes", c.sim.h_bytes);
  double t_cost_us = c.sim.t_cost_s * 1e6;
  h.read("t_cost_us", t_cost_us);
  c.sim.t_cost_s = t_cost_us * 1e-6;
  bool always_preempt = false;
  h.read("always_preempt", always_preempt);
  c.sim.admission = always_preempt ? AdmissionRule::always_preempt : AdmissionRule::min_cost;
  h.finish();
  require(c.sim.h_bytes >= 0, "hyline.h_bytes must be >= 0");
  require(c.sim.t_cost_s >= 0.0, "hyline.t_cost_us must be >= 0");

  Section s = top.child("switch");
  s.read("buffer_pkts", c.sim.buffer_pkts);
  s.read("pause_pkts", c.sim.pause_pkts);
  s.read("resume_pkts", c.sim.resume_pkts);
  s.read("pfc_enabled", c.sim.pfc_enabled);
  s.finish();
  require(c.sim.buffer_pkts > 0, "switch.buffer_pkts must be positive");
  require(c.sim.resume_pkts < c.sim.pause_pkts && c.sim.pause_pkts <= c.sim.buffer_pkts &&
              c.sim.resume_pkts >= 0,
          "switch thresholds need 0 <= resume_pkts < pause_pkts <= buffer_pkts");

  Section tr = top.child("transport");
  tr.read("init_window", c.sim.init_window);
  tr.read("max_window", c.sim.max_window);
  double minrto_ms = c.sim.minrto_class1_s * 1e3;
  tr.read("minrto_ms_class1", minrto_ms);
  c.sim.minrto_class1_s = minrto_ms * 1e-3;
  tr.read("minrto_s_class2", c.sim.minrto_class2_s);
  tr.finish();
  require(c.sim.init_window >= 1 && c.sim.max_window >= c.sim.init_window,
          "transport needs 1 <= init_window <= max_window");
  require(c.sim.minrto_class1_s > 0.0 && c.sim.minrto_class2_s > 0.0, "transport minRTO must be positive");

  Section w = top.child("workload");
  w.read("file", c.workload.file);
  if (w.has("pareto")) {
    Section p = w.child("pareto");
    ParetoConfig pc;
    p.read("alpha", pc.alpha);
    p.read("frac_below_100kb", pc.frac_below_100kb);
    p.read("lower", pc.lower);
    p.read("upper", pc.upper);
    p.finish();
    require(pc.alpha.has_value() != pc.frac_below_100kb.has_value(),
            "workload.pareto needs exactly one of alpha, frac_below_100kb");
    require(pc.lower > 0.0 && pc.lower < pc.upper, "workload.pareto needs 0 < lower < upper");
    require(!pc.alpha || *pc.alpha > 0.0, "workload.pareto.alpha must be positive");
    c.workload.pareto = pc;
  }
  w.read("load", c.workload.load);
  w.read("flows", c.workload.flows);
  w.read("duration_s", c.workload.duration_s);
  w.read("seed", c.workload.seed);
  w.finish();
  require(!(c.workload.file && c.workload.pareto), "workload takes only one of file, pareto");
  if (!c.workload.file && !c.workload.pareto) c.workload.file = "data/websearch.cdf";
  require(c.workload.load > 0.0 && c.workload.load < 1.0, "workload.load must be in (0, 1)");
  if (!c.workload.flows && !c.workload.duration_s) c.workload.flows = 2000;
  require(!c.workload.flows || *c.workload.flows > 0, "workload.flows must be positive");
  require(!c.workload.duration_s || *c.workload.duration_s > 0.0, "workload.duration_s must be positive");
  c.sim.seed = c.workload.seed;

  top.read("mode", c.mode);
  parse_scheme(c.mode);

  Section sw = top.child("sweep");
  sw.read("loads", c.sweep.loads);
  sw.read("seeds", c.sweep.seeds);
  sw.read("schemes", c.sweep.schemes);
  sw.finish();
  for (double l : c.sweep.loads) require(l > 0.0 && l < 1.0, "sweep.loads must be in (0, 1)");
  for (const std::string& name : c.sweep.schemes) parse_scheme(name);

  Section th = top.child("threshold");
  th.read("loads", c.threshold.loads);
  th.read("grid_points", c.threshold.grid_points);
  th.read("max_load_fraction", c.threshold.max_load_fraction);
  th.finish();
  for (double l : c.threshold.loads) require(l >= 0.0 && l < 1.0, "threshold.loads must be in [0, 1)");
  require(c.threshold.grid_points >= 2, "threshold.grid_points must be >= 2");
  require(c.threshold.max_load_fraction > 0.0 && c.threshold.max_load_fraction <= 1.0,
          "threshold.max_load_fraction must be in (0, 1]");

  top.read("output", c.output);
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& overrides) {
  if (!file) return parse_config("{}", overrides, {});
  std::ifstream in(*file);
  if (!in) throw ConfigError("cannot read config file " + file->string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides, file->parent_path());
}

Topology build_topology(const TopologyConfig& t, const SimParams& sim) {
  const double cap = t.link_gbps * 1e9;
  const double delay = per_hop_delay_for_rtt(t.rtt_us * 1e-6, cap, sim.packet_bytes, sim.ack_bytes);
  return Topology::fat_tree(t.k, t.hosts_per_edge, cap, delay);
}

std::filesystem::path resolve_path(const std::string& name, const std::filesystem::path& base_dir) {
  const std::filesystem::path p(name);
  if (p.is_absolute() || std::filesystem::exists(p) || base_dir.empty()) return p;
  const std::filesystem::path alt = base_dir / p;
  return std::filesystem::exists(alt) ? alt : p;
}

SizeModel build_size_model(const WorkloadConfig& w, const std::filesystem::path& base_dir) {
  if (w.file) {
    try {
      return SizeDistribution::load(resolve_path(*w.file, base_dir));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("workload.file: ") + e.what());
    }
  }
  const ParetoConfig& p = *w.pareto;
  try {
    const double alpha = p.alpha ? *p.alpha : fit_bounded_pareto(*p.frac_below_100kb, p.lower, p.upper);
    return BoundedPareto{alpha, p.lower, p.upper};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("workload.pareto: ") + e.what());
  }
}

WorkloadSpec build_workload(const ExperimentConfig& cfg) {
  return WorkloadSpec{build_size_model(cfg.workload, cfg.base_dir), cfg.workload.load,
                      cfg.workload.flows, cfg.workload.duration_s, cfg.workload.seed};
}

}  // namespace hyline
