#include "hyline/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "hyline/metrics.hpp"
#include "hyline/threshold.hpp"
#include "json.hpp"

namespace hyline {

namespace fs = std::filesystem;

namespace {

/// Writes through a temporary file so readers never see a partial file.
template <typename Fn>
void write_file(const fs::path& path, Fn&& fill) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    fill(os);
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct CellSpec {
  std::string scheme;
  double load;
  std::uint64_t seed;
};

/// Runs one configuration and writes its files; summary.csv goes last and
/// marks the directory complete.
void run_cell(const ExperimentConfig& base, const CellSpec& cell, const fs::path& dir) {
  ExperimentConfig cfg = base;
  const Scheme scheme = parse_scheme(cell.scheme);
  cfg.workload.load = cell.load;
  cfg.workload.seed = cell.seed;
  cfg.sim.seed = cell.seed;
  cfg.sim.pfc_enabled = cfg.sim.pfc_enabled && scheme.pfc;

  const Topology topo = build_topology(cfg.topology, cfg.sim);
  const FlowTrace trace = generate_trace(build_workload(cfg), topo);
  RunReport report = run(topo, trace, scheme.mode, cfg.sim);
  report.scheme = cell.scheme;

  fs::create_directories(dir);
  write_file(dir / "flows.csv", [&](std::ostream& os) { write_flow_csv(os, report.flows); });
  write_file(dir / "counters.csv",
             [&](std::ostream& os) { write_counters_csv(os, report.counters, report.man); });
  write_file(dir / "meta.json", [&](std::ostream& os) {
    nlohmann::json meta{{"scheme", cell.scheme}, {"load", cell.load}, {"seed", cell.seed}};
    os << meta.dump(2) << '\n';
  });
  if (scheme.mode == SchedulerMode::hyline) {
    const ManTelemetry t = man_telemetry(report.flows);
    write_file(dir / "man_stats.csv", [&](std::ostream& os) {
      write_man_header(os);
      write_man_rows(os, cell.scheme, cell.load, t);
    });
  }
  const MetricsSummary s = summarize(report.flows, topo);
  write_file(dir / "summary.csv", [&](std::ostream& os) {
    write_summary_header(os);
    write_summary_rows(os, cell.scheme, cell.load, s);
  });
}

std::string cell_name(const CellSpec& c) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_load%.3f_seed%llu", c.scheme.c_str(), c.load,
                static_cast<unsigned long long>(c.seed));
  return buf;
}

std::vector<SummaryRow> read_summary_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return read_summary_csv(in);
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const CellSpec cell{cfg.mode, cfg.workload.load, cfg.workload.seed};
  try {
    run_cell(cfg, cell, out);
  } catch (const DeadlockError& e) {
    log << "deadlock: " << e.what() << '\n';
    return kExitDeadlock;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  log << "wrote " << (out / "flows.csv").string() << " and " << (out / "summary.csv").string() << '\n';
  return kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg, const fs::path& out, int jobs, std::ostream& log) {
  if (cfg.sweep.loads.empty() || cfg.sweep.seeds.empty() || cfg.sweep.schemes.empty()) {
    log << "config error: sweep.loads, sweep.seeds and sweep.schemes must be non-empty\n";
    return kExitConfig;
  }
  std::vector<CellSpec> cells;
  for (const std::string& scheme : cfg.sweep.schemes)
    for (double load : cfg.sweep.loads)
      for (std::uint64_t seed : cfg.sweep.seeds) cells.push_back({scheme, load, seed});

  const fs::path cell_root = out / "cells";
  fs::create_directories(cell_root);
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;

  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const fs::path dir = cell_root / cell_name(cells[i]);
      if (fs::exists(dir / "summary.csv")) {
        std::lock_guard lock(log_mu);
        log << "skip " << cell_name(cells[i]) << " (done)\n";
        continue;
      }
      try {
        run_cell(cfg, cells[i], dir);
        std::lock_guard lock(log_mu);
        log << "done " << cell_name(cells[i]) << '\n';
      } catch (const std::exception& e) {
        errors[i] = e.what();
        std::lock_guard lock(log_mu);
        log << "FAILED " << cell_name(cells[i]) << ": " << e.what() << '\n';
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::min<std::size_t>(cells.size(), hw);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  // merge in grid order from whatever cells are complete
  struct Agg {
    std::vector<double> mean, p99, tput;
    std::int64_t count = 0;
  };
  std::map<std::tuple<std::string, double, std::string>, Agg> agg;
  std::vector<std::tuple<std::string, double, std::string>> agg_order;
  std::size_t failed = 0;
  write_file(out / "sweep_summary.csv", [&](std::ostream& os) {
    os << "scheme,load,seed,mean_nfct,p99_nfct,count,app_tput\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const fs::path summary = cell_root / cell_name(cells[i]) / "summary.csv";
      if (!fs::exists(summary)) {
        ++failed;
        continue;
      }
      for (const SummaryRow& r : read_summary_file(summary)) {
        const auto key = std::make_tuple(r.scheme, r.load, r.bin);
        if (!agg.count(key)) agg_order.push_back(key);
        Agg& a = agg[key];
        a.mean.push_back(r.mean_nfct);
        a.p99.push_back(r.p99_nfct);
        a.tput.push_back(r.app_tput);
        a.count += r.count;
        if (r.bin != to_string(SizeBin::overall)) continue;
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%.4f,%llu,%.9f,%.9f,%lld,%.9f\n", r.scheme.c_str(), r.load,
                      static_cast<unsigned long long>(cells[i].seed), r.mean_nfct, r.p99_nfct,
                      static_cast<long long>(r.count), r.app_tput);
        os << buf;
      }
    }
  });
  write_file(out / "sweep_bins.csv", [&](std::ostream& os) {
    os << "scheme,load,seed,bin,mean_nfct,p99_nfct,count,app_tput\n";
    for (const CellSpec& c : cells) {
      const fs::path summary = cell_root / cell_name(c) / "summary.csv";
      if (!fs::exists(summary)) continue;
      for (const SummaryRow& r : read_summary_file(summary)) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%.4f,%llu,%s,%.9f,%.9f,%lld,%.9f\n", r.scheme.c_str(), r.load,
                      static_cast<unsigned long long>(c.seed), r.bin.c_str(), r.mean_nfct, r.p99_nfct,
                      static_cast<long long>(r.count), r.app_tput);
        os << buf;
      }
    }
  });
  write_file(out / "aggregate.csv", [&](std::ostream& os) {
    os << "scheme,load,bin,seeds,mean_nfct,sd_mean_nfct,mean_p99_nfct,mean_app_tput,count\n";
    const auto avg = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    for (const auto& key : agg_order) {
      const Agg& a = agg.at(key);
      const double m = avg(a.mean);
      double var = 0.0;
      for (double x : a.mean) var += (x - m) * (x - m);
      const double sd = a.mean.size() > 1 ? std::sqrt(var / static_cast<double>(a.mean.size() - 1)) : 0.0;
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%.4f,%s,%zu,%.9f,%.9f,%.9f,%.9f,%lld\n",
                    std::get<0>(key).c_str(), std::get<1>(key), std::get<2>(key).c_str(), a.mean.size(), m,
                    sd, avg(a.p99), avg(a.tput), static_cast<long long>(a.count));
      os << buf;
    }
  });
  if (failed > 0) {
    write_file(out / "failures.csv", [&](std::ostream& os) {
      os << "cell,error\n";
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (!errors[i].empty()) os << cell_name(cells[i]) << ",\"" << errors[i] << "\"\n";
    });
    log << failed << " of " << cells.size() << " cells failed\n";
    return kExitFailure;
  }
  log << "wrote " << (out / "sweep_summary.csv").string() << " (" << cells.size() << " cells)\n";
  return kExitOk;
}

int cmd_threshold(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  if (!cfg.workload.file) {
    log << "config error: threshold analysis needs workload.file\n";
    return kExitConfig;
  }
  SizeDistribution dist({{1.0, 1.0}});
  try {
    dist = SizeDistribution::load(resolve_path(*cfg.workload.file, cfg.base_dir));
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const double cap = cfg.topology.link_gbps * 1e9;
  const int n = cfg.threshold.grid_points;
  const double lo = std::log(dist.min_size());
  const double hi = std::log(dist.max_size());

  fs::create_directories(out);
  std::ostringstream csv;
  csv << "load,x_bytes,expected_wait_s,load_fraction,saturated\n";
  for (double load : cfg.threshold.loads) {
    ThresholdInputs in{dist, cap, load, cfg.sim.t_cost_s, std::nullopt};
    for (int i = 0; i < n; ++i) {
      const double x = std::exp(lo + (hi - lo) * i / (n - 1));
      char buf[160];
      try {
        std::snprintf(buf, sizeof buf, "%.4f,%.1f,%.12g,%.9f,0\n", load, x, expected_wait(in, x),
                      load_fraction_below(in, x));
      } catch (const SaturationError&) {
        std::snprintf(buf, sizeof buf, "%.4f,%.1f,nan,%.9f,1\n", load, x, load_fraction_below(in, x));
      }
      csv << buf;
    }
    BandOptions opts;
    opts.static_h = static_cast<double>(cfg.sim.h_bytes);
    opts.max_load_fraction = cfg.threshold.max_load_fraction;
    const ThresholdBand band = compute_band(in, opts);
    log << "load " << fmt("%.2f", load) << ": " << fmt("%.0f", band.h_low) << ' '
        << fmt("%.0f", band.h_high);
    if (band.empty())
      log << " (empty band)";
    else if (band.contains(band.chosen_h))
      log << " (contains H=" << fmt("%.0f", band.chosen_h) << ")";
    else
      log << " (excludes H=" << fmt("%.0f", band.chosen_h) << ")";
    log << '\n';
  }
  write_file(out / "threshold.csv", [&](std::ostream& os) { os << csv.str(); });
  log << "wrote " << (out / "threshold.csv").string() << '\n';
  return kExitOk;
}

int cmd_report(const ExperimentConfig& cfg, const fs::path& in, const fs::path& out_file,
               std::ostream& log) {
  if (!fs::is_directory(in)) {
    log << "config error: " << in.string() << " is not a directory\n";
    return kExitConfig;
  }
  const Topology topo = build_topology(cfg.topology, cfg.sim);
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::recursive_directory_iterator(in))
    if (entry.is_regular_file() && entry.path().filename() == "meta.json" &&
        fs::exists(entry.path().parent_path() / "flows.csv"))
      dirs.push_back(entry.path().parent_path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) {
    log << "no run directories under " << in.string() << '\n';
    return kExitFailure;
  }
  write_file(out_file, [&](std::ostream& os) {
    write_summary_header(os);
    for (const fs::path& d : dirs) {
      std::ifstream mf(d / "meta.json");
      const nlohmann::json meta = nlohmann::json::parse(mf);
      std::ifstream ff(d / "flows.csv");
      const std::vector<FlowRecord> flows = read_flow_csv(ff);
      write_summary_rows(os, meta.at("scheme").get<std::string>(), meta.at("load").get<double>(),
                         summarize(flows, topo));
    }
  });
  log << "summarized " << dirs.size() << " runs into " << out_file.string() << '\n';
  return kExitOk;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"HyLine hybrid flow scheduling simulator"};
  app.require_subcommand(1);

  std::optional<std::string> config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int jobs = 0;
  std::string report_in;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON experiment config");
    sub->add_option("--set", sets, "override a config key, e.g. workload.load=0.8");
    sub->add_option("--seed", seed, "workload and scheduler seed");
    sub->add_option("--out", out, "output directory (report: output file)");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "one simulation");
  common(run_cmd);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "scheme x load x seed grid");
  common(sweep_cmd);
  sweep_cmd->add_option("--jobs", jobs, "parallel cells (default: cores, capped by cells)");
  CLI::App* threshold_cmd = app.add_subcommand("threshold", "class threshold band analysis");
  common(threshold_cmd);
  CLI::App* report_cmd = app.add_subcommand("report", "re-aggregate existing run directories");
  common(report_cmd);
  report_cmd->add_option("--in", report_in, "directory searched for runs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (seed) sets.push_back("workload.seed=" + std::to_string(*seed));
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_file ? std::optional<fs::path>(*config_file) : std::nullopt, sets);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const fs::path out_dir = out ? fs::path(*out) : fs::path(cfg.output);

  try {
    if (run_cmd->parsed()) return cmd_run(cfg, out_dir, std::cerr);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, out_dir, jobs, std::cerr);
    if (threshold_cmd->parsed()) return cmd_threshold(cfg, out_dir, std::cout);
    const fs::path report_out = out ? fs::path(*out) : fs::path(report_in) / "report.csv";
    return cmd_report(cfg, report_in, report_out, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace hyline
