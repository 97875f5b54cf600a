#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyline/simengine.hpp"
#include "hyline/topology.hpp"
#include "hyline/workload.hpp"

namespace hyline {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TopologyConfig {
  int k = 4;
  int hosts_per_edge = 2;
  double link_gbps = 1.0;
  double rtt_us = 300.0;
};

struct ParetoConfig {
  std::optional<double> alpha;
  std::optional<double> frac_below_100kb;
  double lower = 1e3;
  double upper = 1e8;
};

struct WorkloadConfig {
  std::optional<std::string> file;
  std::optional<ParetoConfig> pareto;
  double load = 0.6;
  std::optional<std::int64_t> flows;
  std::optional<double> duration_s;
  std::uint64_t seed = 1;
};

/// Scheme names accepted by `mode` and `sweep.schemes`:
/// hyline, hyline_nopfc, baseline_fair, baseline_srpt.
struct Scheme {
  SchedulerMode mode;
  bool pfc;
};
Scheme parse_scheme(const std::string& name);

struct SweepConfig {
  std::vector<double> loads;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> schemes;
};

struct ThresholdConfig {
  std::vector<double> loads{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int grid_points = 200;
  double max_load_fraction = 0.1;
};

struct ExperimentConfig {
  TopologyConfig topology;
  SimParams sim;  // h_bytes, t_cost, switch and transport settings
  WorkloadConfig workload;
  std::string mode = "hyline";
  SweepConfig sweep;
  ThresholdConfig threshold;
  std::string output = "out";
  std::filesystem::path base_dir;  // where relative file names are also tried
};

/// Parses JSON text, applies "dotted.key=value" overrides, validates.
/// Unknown keys and bad values throw ConfigError.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::vector<std::string>& overrides = {},
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& overrides = {});

Topology build_topology(const TopologyConfig& t, const SimParams& sim);
SizeModel build_size_model(const WorkloadConfig& w, const std::filesystem::path& base_dir);
std::filesystem::path resolve_path(const std::string& name, const std::filesystem::path& base_dir);
WorkloadSpec build_workload(const ExperimentConfig& cfg);

}  // namespace hyline
