#include "hyline/workload.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hyline {

void BoundedPareto::validate() const {
  if (!(lower > 0.0 && lower < upper)) throw std::invalid_argument("bounded Pareto needs 0 < L < U");
  if (!(alpha > 0.0)) throw std::invalid_argument("bounded Pareto needs alpha > 0");
}

double BoundedPareto::cdf(double x) const {
  if (x <= lower) return 0.0;
  if (x >= upper) return 1.0;
  // (1 - (L/x)^a) / (1 - (L/U)^a), written to stay accurate for tiny a
  return std::expm1(alpha * std::log(lower / x)) / std::expm1(alpha * std::log(lower / upper));
}

double BoundedPareto::quantile(double u) const {
  const double span = -std::expm1(alpha * std::log(lower / upper));  // 1 - (L/U)^a
  const double x = lower * std::exp(-std::log1p(-u * span) / alpha);
  return std::min(std::max(x, lower), upper);
}

double BoundedPareto::mean() const {
  const double span = -std::expm1(alpha * std::log(lower / upper));
  if (std::abs(alpha - 1.0) < 1e-12) return lower * std::log(upper / lower) / span;
  // alpha L^a / (1 - a) * (U^(1-a) - L^(1-a)) / span, factored to avoid overflow
  const double ratio = std::expm1((1.0 - alpha) * std::log(upper / lower));  // (U/L)^(1-a) - 1
  return alpha * lower * ratio / ((1.0 - alpha) * span);
}

double fit_bounded_pareto(double frac_below, double lower, double upper, double at_bytes) {
  if (!(lower < at_bytes && at_bytes < upper))
    throw std::invalid_argument("fit_bounded_pareto: need L < x < U");
  const double floor_alpha = 1e-9;
  const auto f = [&](double a) { return BoundedPareto{a, lower, upper}.cdf(at_bytes); };
  const double min_frac = std::log(at_bytes / lower) / std::log(upper / lower);
  if (!(frac_below < 1.0) || frac_below < min_frac - 1e-9)
    throw std::invalid_argument("fit_bounded_pareto: fraction " + std::to_string(frac_below) +
                                " outside attainable range [" + std::to_string(min_frac) + ", 1)");
  if (frac_below <= f(floor_alpha)) return floor_alpha;
  double lo = floor_alpha;
  double hi = 1.0;
  while (f(hi) < frac_below) {
    hi *= 2.0;
    if (hi > 1e6) throw std::invalid_argument("fit_bounded_pareto: fraction too close to 1");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < frac_below ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double model_mean(const SizeModel& m) {
  return std::visit([](const auto& d) { return d.mean(); }, m);
}

double model_cdf(const SizeModel& m, double x) {
  return std::visit([x](const auto& d) { return d.cdf(x); }, m);
}

Bytes sample_size(const SizeModel& m, std::mt19937_64& rng) {
  const double u = unit_uniform(rng);
  const double x = std::visit([u](const auto& d) { return d.quantile(u); }, m);
  return std::max<Bytes>(1, std::llround(x));
}

double per_host_rate(const WorkloadSpec& spec, double line_rate_bps) {
  return spec.target_load * line_rate_bps / (model_mean(spec.sizes) * 8.0);
}

FlowTrace generate_trace(const WorkloadSpec& spec, const Topology& topo) {
  if (!(spec.target_load > 0.0 && spec.target_load < 1.0))
    throw std::invalid_argument("target_load must be in (0, 1)");
  if (!spec.flow_count && !spec.duration_s)
    throw std::invalid_argument("workload needs a flow count or a duration");
  if (const auto* bp = std::get_if<BoundedPareto>(&spec.sizes)) bp->validate();
  const int hosts = topo.host_count();
  if (hosts < 2) throw std::invalid_argument("workload needs at least two hosts");

  // host uplinks all share the same line rate
  const double line_rate = topo.link(topo.outbound(0).front()).capacity_bps;
  const double total_rate = per_host_rate(spec, line_rate) * hosts;

  std::mt19937_64 rng(spec.seed);
  FlowTrace trace;
  double t = 0.0;
  for (FlowId id = 0;; ++id) {
    if (spec.flow_count && id >= *spec.flow_count) break;
    t += -std::log1p(-unit_uniform(rng)) / total_rate;
    if (!spec.flow_count && t > *spec.duration_s) break;
    const auto src = static_cast<HostId>(rng() % static_cast<std::uint64_t>(hosts));
    auto dst = static_cast<HostId>(rng() % static_cast<std::uint64_t>(hosts - 1));
    if (dst >= src) ++dst;
    trace.push_back({id, t, src, dst, sample_size(spec.sizes, rng)});
  }
  return trace;
}

void write_trace_csv(std::ostream& os, const FlowTrace& trace) {
  os << "arrival_s,src,dst,bytes\n";
  char buf[128];
  for (const TraceEntry& e : trace) {
    std::snprintf(buf, sizeof buf, "%.9f,%d,%d,%lld\n", e.arrival_s, e.src, e.dst,
                  static_cast<long long>(e.bytes));
    os << buf;
  }
}

FlowTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "arrival_s,src,dst,bytes")
    throw std::runtime_error("trace CSV: missing header");
  FlowTrace trace;
  double prev = 0.0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    TraceEntry e{static_cast<FlowId>(trace.size()), 0.0, 0, 0, 0};
    long long bytes = 0;
    if (std::sscanf(line.c_str(), "%lf,%d,%d,%lld", &e.arrival_s, &e.src, &e.dst, &bytes) != 4)
      throw std::runtime_error("trace CSV: bad row '" + line + "'");
    e.bytes = bytes;
    if (e.arrival_s < prev) throw std::runtime_error("trace CSV: arrivals out of order");
    if (e.src == e.dst || e.bytes <= 0) throw std::runtime_error("trace CSV: bad flow '" + line + "'");
    prev = e.arrival_s;
    trace.push_back(e);
  }
  return trace;
}

}  // namespace hyline
