#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hyline/config.hpp"

namespace hyline {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // runtime error or failed sweep cells
  kExitConfig = 2,
  kExitDeadlock = 3,
};

/// One simulation; writes flows.csv, summary.csv, counters.csv, meta.json
/// and, for hyline schemes, man_stats.csv into `out`.
int cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// The (scheme x load x seed) grid. Cells whose summary.csv already exists
/// are skipped; merged tables are rebuilt from every cell present.
int cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs,
              std::ostream& log);

/// Prints the class band per load and writes threshold.csv.
int cmd_threshold(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Recomputes summaries for every run directory found under `in`.
int cmd_report(const ExperimentConfig& cfg, const std::filesystem::path& in,
               const std::filesystem::path& out_file, std::ostream& log);

/// Entry point shared by the executable and the tests.
int cli_main(int argc, char** argv);

}  // namespace hyline
