#pragma once

// Experiment configuration, read from YAML:
//
//   experiment:
//     kind: score-error        # score-error | generate | kde-compare | bounds-check
//     seed: 7
//   target:
//     kind: gaussian           # gaussian | file
//     mean: [-5, 5]
//     variance: 10
//
// Sections and keys are fixed; unknown or duplicate ones are errors. Every
// parse or validation error names the source and line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scorelab/core.hpp"

namespace scorelab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { score_error, generate, kde_compare, bounds_check };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> experiment_kind_from_string(std::string_view name);

struct TargetSpec {
  enum class Kind { gaussian, file };
  Kind kind = Kind::gaussian;
  Point mean{-5.0, 5.0};
  double variance = 10.0;
  std::filesystem::path path;  // dataset file when kind == file
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::score_error;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output = "out";
  TargetSpec target;

  // dataset:
  std::size_t dataset_size = 100;
  std::optional<double> dataset_radius;  // rescale so every ||y_i|| <= radius

  // sampler:
  double horizon = 5.0;
  double step = 0.0005;
  std::vector<double> deltas{0.01};
  std::size_t samples = 1000;
  std::vector<std::string> scores{"empirical", "exact"};

  // score_error:
  std::vector<std::size_t> sizes{100, 200, 500, 1000, 2000};
  double error_delta = 0.02;
  double error_horizon = 5.0;
  double error_grid_step = 0.02;
  std::size_t mc_samples = 1000;
  std::size_t repetitions = 10;

  // kde_compare:
  double alpha = 0.01;
  std::size_t permutations = 500;
  double bandwidth_factor = 1.0;
  double scott_multiplier = 0.1;

  // bounds:
  std::vector<double> bound_deltas{0.01, 0.1};
  std::vector<double> bound_horizons{3.0, 5.0};
  std::size_t tv_samples = 100000;
  std::size_t random_instances = 200;

  std::string source_name = "<memory>";
  std::map<std::string, std::size_t> key_lines;  // "section.key" -> line, for messages

  /// Checks everything the chosen experiment needs; throws ConfigError.
  void validate() const;

  /// Canonical YAML rendering of every resolved setting (output path excluded).
  std::string echo() const;
  nlohmann::json to_json() const;
};

ExperimentConfig parse_config(std::string_view text, const std::string& source_name = "<memory>");
/// Relative dataset paths are resolved against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// Text of a built-in preset; throws ConfigError for unknown names.
std::string preset_text(const std::string& name);
/// Accepts "NAME" or "preset:NAME".
ExperimentConfig load_preset(const std::string& name);

}  // namespace scorelab
