#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "hyline/distribution.hpp"
#include "hyline/topology.hpp"
#include "hyline/types.hpp"

namespace hyline {

/// Pareto distribution truncated to [lower, upper].
struct BoundedPareto {
  double alpha;
  double lower;
  double upper;

  void validate() const;
  double cdf(double x) const;
  double quantile(double u) const;
  double mean() const;
};

/// Shape alpha such that cdf(at_bytes) == frac_below. The attainable range
/// is [ln(at/L)/ln(U/L), 1); a target at the lower end (within 1e-9) maps
/// to the smallest shape 1e-9, i.e. a log-uniform distribution.
double fit_bounded_pareto(double frac_below, double lower, double upper,
                          double at_bytes = 100.0 * kKB);

using SizeModel = std::variant<SizeDistribution, BoundedPareto>;

double model_mean(const SizeModel& m);
double model_cdf(const SizeModel& m, double x);

struct WorkloadSpec {
  SizeModel sizes;
  double target_load = 0.5;  // fraction of host line rate
  std::optional<std::int64_t> flow_count;
  std::optional<double> duration_s;
  std::uint64_t seed = 1;
};

struct TraceEntry {
  FlowId id;
  double arrival_s;
  HostId src;
  HostId dst;
  Bytes bytes;
};

using FlowTrace = std::vector<TraceEntry>;

/// Uniform double in [0, 1) from the top 53 bits; stable across standard
/// libraries, unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Per-host flow arrival rate: load * line_rate / mean size in bits.
double per_host_rate(const WorkloadSpec& spec, double line_rate_bps);

/// Poisson arrivals at per_host_rate from every host, destinations uniform
/// over the other hosts. Stops at flow_count or duration, whichever is set
/// (flow_count wins when both are).
FlowTrace generate_trace(const WorkloadSpec& spec, const Topology& topo);

Bytes sample_size(const SizeModel& m, std::mt19937_64& rng);

/// CSV `arrival_s,src,dst,bytes`; ids are row indices on read.
void write_trace_csv(std::ostream& os, const FlowTrace& trace);
FlowTrace read_trace_csv(std::istream& is);

}  // namespace hyline
