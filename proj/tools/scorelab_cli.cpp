// scorelab: run the diffusion/KDE experiments from a config file or preset.
//
//   scorelab score-error  --config fig2.yaml [--seed S] [--out DIR] [--threads K]
//   scorelab generate     --preset figure3
//   scorelab show-preset  figure2
//
// Exit codes: 0 success, 1 a requested check failed, 2 config or IO error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "scorelab/config.hpp"
#include "scorelab/experiments.hpp"
#include "scorelab/io.hpp"
#include "scorelab/parallel.hpp"

namespace {

struct RunOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 0;
};

void add_run_options(CLI::App* sub, RunOptions& opts) {
  auto* config = sub->add_option("--config", opts.config_path, "experiment config file");
  auto* preset = sub->add_option("--preset", opts.preset, "built-in preset name");
  config->excludes(preset);
  sub->add_option("--seed", opts.seed, "master seed (overrides the config)");
  sub->add_option("--out", opts.out, "output directory (overrides the config)");
  sub->add_option("--threads", opts.threads, "worker threads (default: all cores)")
      ->check(CLI::PositiveNumber);
}

int run(scorelab::ExperimentKind kind, const RunOptions& opts) {
  using namespace scorelab;
  try {
    if (opts.config_path.empty() == opts.preset.empty())
      throw ConfigError("exactly one of --config or --preset is required");
    auto cfg = opts.preset.empty() ? load_config(opts.config_path) : load_preset(opts.preset);
    if (cfg.kind != kind)
      throw ConfigError(cfg.source_name + ": config is for '" + to_string(cfg.kind) +
                        "' but the subcommand is '" + to_string(kind) + "'");
    if (opts.seed) cfg.seed = opts.seed;
    if (!opts.out.empty()) cfg.output = opts.out;
    if (opts.threads > 0) set_thread_count(opts.threads);
    const auto outcome = run_experiment(cfg);
    std::cout << outcome.summary << "\n";
    for (const auto& path : outcome.written) std::cout << "wrote " << path.string() << "\n";
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  using scorelab::ExperimentKind;
  CLI::App app{"Score-based diffusion vs kernel density estimation experiments"};
  app.require_subcommand(1);

  RunOptions opts;
  const std::pair<const char*, ExperimentKind> commands[] = {
      {"score-error", ExperimentKind::score_error},
      {"generate", ExperimentKind::generate},
      {"kde-compare", ExperimentKind::kde_compare},
      {"bounds-check", ExperimentKind::bounds_check},
  };
  std::optional<ExperimentKind> chosen;
  for (const auto& [name, kind] : commands) {
    auto* sub = app.add_subcommand(name, "run the " + std::string(name) + " experiment");
    add_run_options(sub, opts);
    sub->callback([&chosen, kind = kind] { chosen = kind; });
  }

  std::string preset_name;
  auto* show = app.add_subcommand("show-preset", "print a built-in preset config");
  show->add_option("name", preset_name, "preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (show->parsed()) {
    try {
      std::cout << scorelab::preset_text(preset_name);
      return 0;
    } catch (const scorelab::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
  }
  return run(*chosen, opts);
}
