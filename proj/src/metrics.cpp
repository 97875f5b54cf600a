#include "hyline/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hyline {

double ideal_fct(int hops, Bytes size, double capacity_bps, double link_delay_s, int packet_bytes) {
  const double lead = static_cast<double>(std::min<Bytes>(size, packet_bytes));
  return hops * link_delay_s + static_cast<double>(size) * 8.0 / capacity_bps +
         (hops - 1) * lead * 8.0 / capacity_bps;
}

double ideal_fct(const Topology& topo, HostId src, HostId dst, Bytes size, int packet_bytes) {
  const Link& l = topo.link(topo.outbound(src).front());
  return ideal_fct(topo.hop_count(src, dst), size, l.capacity_bps, l.propagation_delay_s, packet_bytes);
}

SizeBin size_bin(Bytes size) {
  if (size <= 100 * kKB) return SizeBin::tiny;
  if (size <= kMB) return SizeBin::small;
  if (size <= 10 * kMB) return SizeBin::medium;
  return SizeBin::large;
}

std::string_view to_string(SizeBin b) {
  switch (b) {
    case SizeBin::tiny: return "0-100KB";
    case SizeBin::small: return "100KB-1MB";
    case SizeBin::medium: return "1MB-10MB";
    case SizeBin::large: return "10MB-inf";
    case SizeBin::overall: return "all";
  }
  return "?";
}

const BinStats* MetricsSummary::find(SizeBin b) const {
  for (const BinStats& s : bins)
    if (s.bin == b) return &s;
  return nullptr;
}

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("nearest_rank: no values");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("nearest_rank: q must be in (0, 1]");
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size()) - 1e-9));
  const std::size_t idx = std::max<std::size_t>(rank, 1) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
  return values[idx];
}

std::vector<FlowRecord> after_warmup(const std::vector<FlowRecord>& flows, double warmup_fraction) {
  std::vector<FlowRecord> sorted = flows;
  std::stable_sort(sorted.begin(), sorted.end(), [](const FlowRecord& a, const FlowRecord& b) {
    return a.arrival_s != b.arrival_s ? a.arrival_s < b.arrival_s : a.id < b.id;
  });
  const auto skip = static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(sorted.size())));
  sorted.erase(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(skip));
  return sorted;
}

namespace {

BinStats bin_stats(SizeBin bin, const std::vector<double>& nfct, const std::vector<bool>& met) {
  BinStats s{bin};
  s.count = static_cast<std::int64_t>(nfct.size());
  double sum = 0.0;
  std::int64_t ok = 0;
  for (std::size_t i = 0; i < nfct.size(); ++i) {
    sum += nfct[i];
    ok += met[i] ? 1 : 0;
  }
  s.mean_nfct = sum / static_cast<double>(s.count);
  s.p99_nfct = nearest_rank(nfct, 0.99);
  s.app_throughput = static_cast<double>(ok) / static_cast<double>(s.count);
  return s;
}

}  // namespace

MetricsSummary summarize(const std::vector<FlowRecord>& flows, const Topology& topo,
                         const SummaryOptions& opts) {
  const Link& l = topo.links().front();
  std::vector<double> nfct[4];
  std::vector<bool> met[4];
  std::vector<double> all_nfct;
  std::vector<bool> all_met;
  for (const FlowRecord& r : after_warmup(flows, opts.warmup_fraction)) {
    if (opts.only_class && r.cls != *opts.only_class) continue;
    const double ideal = ideal_fct(r.path_len, r.bytes, l.capacity_bps, l.propagation_delay_s, opts.packet_bytes);
    const double n = r.fct() / ideal;
    const bool ok = r.fct() <= opts.deadline_factor * ideal;
    const auto b = static_cast<std::size_t>(size_bin(r.bytes));
    nfct[b].push_back(n);
    met[b].push_back(ok);
    all_nfct.push_back(n);
    all_met.push_back(ok);
  }
  MetricsSummary s;
  for (SizeBin b : kSizeBins) {
    const auto i = static_cast<std::size_t>(b);
    if (!nfct[i].empty()) s.bins.push_back(bin_stats(b, nfct[i], met[i]));
  }
  if (!all_nfct.empty()) s.bins.push_back(bin_stats(SizeBin::overall, all_nfct, all_met));
  return s;
}

ManTelemetry man_telemetry(const std::vector<FlowRecord>& flows, const SummaryOptions& opts) {
  ManTelemetry t;
  const std::vector<FlowRecord> kept = after_warmup(flows, opts.warmup_fraction);
  struct Acc {
    std::int64_t n = 0;
    double wait = 0.0, stopped = 0.0, pre = 0.0;
  };
  Acc acc[5];
  std::int64_t requests = 0;
  for (const FlowRecord& r : kept) {
    if (r.cls != FlowClass::second) continue;
    ++requests;
    for (std::size_t b : {static_cast<std::size_t>(size_bin(r.bytes)), static_cast<std::size_t>(SizeBin::overall)}) {
      ++acc[b].n;
      acc[b].wait += r.wait_s;
      acc[b].stopped += r.stopped_s;
      acc[b].pre += static_cast<double>(r.preemptions);
    }
  }
  if (kept.size() > 1) {
    const double span = kept.back().arrival_s - kept.front().arrival_s;
    if (span > 0.0) t.requests_per_s = static_cast<double>(requests) / span;
  }
  for (SizeBin b : {SizeBin::tiny, SizeBin::small, SizeBin::medium, SizeBin::large, SizeBin::overall}) {
    const Acc& a = acc[static_cast<std::size_t>(b)];
    if (a.n == 0) continue;
    const auto n = static_cast<double>(a.n);
    t.bins.push_back({b, a.n, a.wait / n, a.stopped / n, a.pre / n});
  }
  return t;
}

void write_summary_header(std::ostream& os) { os << kSummaryCsvHeader << '\n'; }

void write_summary_rows(std::ostream& os, const std::string& scheme, double load,
                        const MetricsSummary& s) {
  char buf[256];
  for (const BinStats& b : s.bins) {
    std::snprintf(buf, sizeof buf, "%s,%.4f,%s,%.9f,%.9f,%lld,%.9f\n", scheme.c_str(), load,
                  std::string(to_string(b.bin)).c_str(), b.mean_nfct, b.p99_nfct,
                  static_cast<long long>(b.count), b.app_throughput);
    os << buf;
  }
}

void write_man_header(std::ostream& os) { os << kManCsvHeader << '\n'; }

void write_man_rows(std::ostream& os, const std::string& scheme, double load, const ManTelemetry& t) {
  char buf[256];
  for (const ManBinStats& b : t.bins) {
    std::snprintf(buf, sizeof buf, "%s,%.4f,%s,%lld,%.9f,%.9f,%.9f,%.9f\n", scheme.c_str(), load,
                  std::string(to_string(b.bin)).c_str(), static_cast<long long>(b.count),
                  t.requests_per_s, b.mean_wait_s, b.mean_stopped_s, b.mean_preemptions);
    os << buf;
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSummaryCsvHeader)
    throw std::runtime_error("summary CSV: unexpected header");
  std::vector<SummaryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    SummaryRow r;
    std::string field;
    std::vector<std::string> cols;
    while (std::getline(ls, field, ',')) cols.push_back(field);
    if (cols.size() != 7) throw std::runtime_error("summary CSV: bad row '" + line + "'");
    try {
      r.scheme = cols[0];
      r.load = std::stod(cols[1]);
      r.bin = cols[2];
      r.mean_nfct = std::stod(cols[3]);
      r.p99_nfct = std::stod(cols[4]);
      r.count = std::stoll(cols[5]);
      r.app_tput = std::stod(cols[6]);
    } catch (const std::exception&) {
      throw std::runtime_error("summary CSV: bad number in '" + line + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace hyline
