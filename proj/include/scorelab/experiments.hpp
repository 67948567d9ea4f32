#pragma once

// Experiment runners behind the command-line tool. Each runner computes all
// of its outputs in memory first and writes files only when nothing failed,
// so a bad config or input never leaves partial results behind.

#include <filesystem>
#include <string>
#include <vector>

#include "scorelab/config.hpp"

namespace scorelab {

struct RunOutcome {
  int exit_code = 0;  // 0 success, 1 a requested check failed
  std::vector<std::filesystem::path> written;
  std::string summary;  // a few human-readable lines
};

/// Output files in CSV/JSON form, keyed by file name relative to cfg.output.
struct OutputFile {
  std::string name;
  std::string content;
};

/// Validates cfg, then dispatches on cfg.kind.
RunOutcome run_experiment(const ExperimentConfig& cfg);

RunOutcome run_score_error(const ExperimentConfig& cfg);
RunOutcome run_generate(const ExperimentConfig& cfg);
RunOutcome run_kde_compare(const ExperimentConfig& cfg);
RunOutcome run_bounds_check(const ExperimentConfig& cfg);

/// Resolved-config lines that every output file starts with, as '#' comments in CSV
/// files (the lines themselves carry no '#').
std::vector<std::string> provenance_lines(const ExperimentConfig& cfg);

}  // namespace scorelab
