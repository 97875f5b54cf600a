#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hyline/cli.hpp"
#include "hyline/config.hpp"
#include "hyline/metrics.hpp"

using namespace hyline;
namespace fs = std::filesystem;

namespace {

const std::string kData = std::string(HYLINE_SOURCE_DIR) + "/data/websearch.cdf";

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hyline");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hyline_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("config defaults, overrides and validation") {
  const ExperimentConfig d = parse_config("{}");
  CHECK(d.topology.k == 4);
  CHECK(d.sim.h_bytes == kMB);
  CHECK(d.sim.t_cost_s == doctest::Approx(100e-6));
  CHECK(d.sim.pfc_enabled);
  CHECK(*d.workload.file == "data/websearch.cdf");
  CHECK(*d.workload.flows == 2000);

  const ExperimentConfig o = parse_config(
      R"({"topology": {"k": 6}, "hyline": {"t_cost_us": 50, "always_preempt": true}})",
      {"workload.load=0.8", "switch.pfc_enabled=false", "mode=baseline_fair", "transport.max_window=64"});
  CHECK(o.topology.k == 6);
  CHECK(o.sim.t_cost_s == doctest::Approx(50e-6));
  CHECK(o.sim.admission == AdmissionRule::always_preempt);
  CHECK(o.workload.load == 0.8);
  CHECK_FALSE(o.sim.pfc_enabled);
  CHECK(o.mode == "baseline_fair");
  CHECK(o.sim.max_window == 64);

  const ExperimentConfig p = parse_config(R"({"workload": {"pareto": {"frac_below_100kb": 0.97}}})");
  CHECK_FALSE(p.workload.file.has_value());
  const SizeModel m = build_size_model(p.workload, {});
  CHECK(model_cdf(m, 1e5) == doctest::Approx(0.97).epsilon(1e-9));

  CHECK_THROWS_AS(parse_config(R"({"topology": {"kk": 4}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"topology": {"k": 5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"workload": {"load": 1.2}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"topology": {"k": "four"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"mode": "pfabric"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"switch": {"pause_pkts": 300}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"workload": {"file": "x", "pareto": {"alpha": 1}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{}", {"novalue"}), ConfigError);
}

TEST_CASE("run writes its outputs and exits 0; bad config exits 2") {
  const fs::path dir = scratch("run");
  CHECK(cli({"run", "--set", "workload.file=" + kData, "--set", "workload.flows=150", "--out",
             dir.string()}) == kExitOk);
  for (const char* f : {"flows.csv", "summary.csv", "counters.csv", "meta.json", "man_stats.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(lines(dir / "flows.csv") == 151);
  std::ifstream s(dir / "summary.csv");
  const auto rows = read_summary_csv(s);
  REQUIRE(!rows.empty());
  CHECK(rows.back().bin == "all");
  CHECK(rows.back().count == 135);

  CHECK(cli({"run", "--set", "topology.k=3", "--out", dir.string()}) == kExitConfig);
  CHECK(cli({"run", "--bogus-flag"}) == kExitConfig);
  CHECK(cli({"run", "--config", (dir / "missing.json").string()}) == kExitConfig);
  CHECK(cli({}) == kExitConfig);
}

TEST_CASE("same config and seed give byte-identical files; other seeds differ") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  const fs::path c = scratch("det_c");
  const std::vector<std::string> base{"run", "--set", "workload.file=" + kData, "--set", "workload.flows=200"};
  auto with = [&](const fs::path& out, const std::string& seed) {
    auto args = base;
    args.insert(args.end(), {"--seed", seed, "--out", out.string()});
    return cli(args);
  };
  REQUIRE(with(a, "4") == kExitOk);
  REQUIRE(with(b, "4") == kExitOk);
  REQUIRE(with(c, "5") == kExitOk);
  for (const char* f : {"flows.csv", "summary.csv", "counters.csv", "man_stats.csv"})
    CHECK(slurp(a / f) == slurp(b / f));
  CHECK(slurp(a / "flows.csv") != slurp(c / "flows.csv"));
}

TEST_CASE("sweep covers the grid, resumes, and report re-aggregates") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = dir / "sweep.json";
  std::ofstream(cfg) << R"({"workload": {"file": ")" << kData << R"(", "flows": 120},
    "sweep": {"loads": [0.3, 0.6], "seeds": [1, 2], "schemes": ["hyline", "baseline_fair", "baseline_srpt"]}})";
  const fs::path out = dir / "out";
  REQUIRE(cli({"sweep", "--config", cfg.string(), "--out", out.string(), "--jobs", "3"}) == kExitOk);
  CHECK(lines(out / "sweep_summary.csv") == 1 + 3 * 2 * 2);
  CHECK(fs::exists(out / "aggregate.csv"));
  CHECK(fs::exists(out / "sweep_bins.csv"));
  const std::string first = slurp(out / "sweep_summary.csv");

  // a second invocation skips finished cells and rebuilds the same tables
  const auto stamp = fs::last_write_time(out / "cells" / "hyline_load0.300_seed1" / "flows.csv");
  REQUIRE(cli({"sweep", "--config", cfg.string(), "--out", out.string()}) == kExitOk);
  CHECK(fs::last_write_time(out / "cells" / "hyline_load0.300_seed1" / "flows.csv") == stamp);
  CHECK(slurp(out / "sweep_summary.csv") == first);

  // an interrupted cell (no summary.csv) is rerun
  fs::remove(out / "cells" / "hyline_load0.600_seed2" / "summary.csv");
  REQUIRE(cli({"sweep", "--config", cfg.string(), "--out", out.string()}) == kExitOk);
  CHECK(slurp(out / "sweep_summary.csv") == first);

  const fs::path rep = dir / "report.csv";
  REQUIRE(cli({"report", "--in", (out / "cells").string(), "--out", rep.string()}) == kExitOk);
  std::ifstream r(rep);
  const auto rows = read_summary_csv(r);
  CHECK(std::count_if(rows.begin(), rows.end(), [](const SummaryRow& x) { return x.bin == "all"; }) == 12);

  CHECK(cli({"sweep", "--out", (dir / "empty").string()}) == kExitConfig);
}

TEST_CASE("threshold subcommand prints one band per load") {
  const fs::path dir = scratch("threshold");
  REQUIRE(cli({"threshold", "--set", "workload.file=" + kData, "--set", "threshold.loads=[0.3,0.6]",
               "--out", dir.string()}) == kExitOk);
  CHECK(fs::exists(dir / "threshold.csv"));
  CHECK(slurp(dir / "threshold.csv").rfind("load,x_bytes,expected_wait_s,load_fraction,saturated\n", 0) == 0);
}
