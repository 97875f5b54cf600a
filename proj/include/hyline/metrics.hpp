#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hyline/report.hpp"
#include "hyline/topology.hpp"

namespace hyline {

/// Empty-fabric FCT: propagation over the path, serialization of the whole
/// flow at line rate, and store-and-forward of the leading packet at every
/// hop after the first.
double ideal_fct(int hops, Bytes size, double capacity_bps, double link_delay_s,
                 int packet_bytes = 1500);
double ideal_fct(const Topology& topo, HostId src, HostId dst, Bytes size, int packet_bytes = 1500);

enum class SizeBin : std::uint8_t { tiny, small, medium, large, overall };

/// (0,100KB], (100KB,1MB], (1MB,10MB], (10MB,inf).
SizeBin size_bin(Bytes size);
std::string_view to_string(SizeBin b);
inline constexpr SizeBin kSizeBins[] = {SizeBin::tiny, SizeBin::small, SizeBin::medium,
                                        SizeBin::large};

struct BinStats {
  SizeBin bin;
  std::int64_t count = 0;
  double mean_nfct = 0.0;
  double p99_nfct = 0.0;
  double app_throughput = 0.0;  // share of flows meeting their deadline
};

struct ManBinStats {
  SizeBin bin;
  std::int64_t count = 0;  // second-class flows in the bin
  double mean_wait_s = 0.0;
  double mean_stopped_s = 0.0;
  double mean_preemptions = 0.0;
};

struct ManTelemetry {
  double requests_per_s = 0.0;
  std::vector<ManBinStats> bins;  // populated bins, then overall
};

struct SummaryOptions {
  double warmup_fraction = 0.1;  // leading flows, by arrival, left out
  double deadline_factor = 4.0;
  int packet_bytes = 1500;
  /// Restricts the summary to one class when set.
  std::optional<FlowClass> only_class;
};

struct MetricsSummary {
  std::vector<BinStats> bins;  // populated bins in order, then overall
  const BinStats* find(SizeBin b) const;
};

/// Nearest-rank percentile of unsorted values; q in (0, 1].
double nearest_rank(std::vector<double> values, double q);

/// The flows kept after warm-up exclusion, in arrival order.
std::vector<FlowRecord> after_warmup(const std::vector<FlowRecord>& flows, double warmup_fraction);

/// Uses path_len from each record and the first link's capacity and delay.
MetricsSummary summarize(const std::vector<FlowRecord>& flows, const Topology& topo,
                         const SummaryOptions& opts = {});

ManTelemetry man_telemetry(const std::vector<FlowRecord>& flows, const SummaryOptions& opts = {});

inline constexpr const char* kSummaryCsvHeader = "scheme,load,bin,mean_nfct,p99_nfct,count,app_tput";
inline constexpr const char* kManCsvHeader =
    "scheme,load,bin,count,requests_per_s,mean_wait_s,mean_stopped_s,mean_preemptions";

void write_summary_header(std::ostream& os);
void write_summary_rows(std::ostream& os, const std::string& scheme, double load,
                        const MetricsSummary& s);
void write_man_header(std::ostream& os);
void write_man_rows(std::ostream& os, const std::string& scheme, double load, const ManTelemetry& t);

struct SummaryRow {
  std::string scheme;
  double load = 0.0;
  std::string bin;
  double mean_nfct = 0.0;
  double p99_nfct = 0.0;
  std::int64_t count = 0;
  double app_tput = 0.0;
};

std::vector<SummaryRow> read_summary_csv(std::istream& is);

}  // namespace hyline
