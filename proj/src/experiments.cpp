#include "scorelab/experiments.hpp"

#include <cmath>
#include <sstream>

#include "scorelab/estimators.hpp"
#include "scorelab/io.hpp"
#include "scorelab/kde.hpp"
#include "scorelab/ou.hpp"
#include "scorelab/samplers.hpp"
#include "scorelab/scores.hpp"

namespace scorelab {
namespace {

// First element of every derive_seed path, one per consumer of randomness.
enum Stream : std::uint64_t {
  kDataset = 1,
  kSampler = 2,
  kKde = 3,
  kTest = 4,
  kOracle = 5,
  kTv = 6,
  kInstances = 7,
};

using json = nlohmann::json;

IsotropicGaussianTarget gaussian_target(const ExperimentConfig& cfg) {
  return {cfg.target.mean, cfg.target.variance};
}

Dataset prepare_dataset(const ExperimentConfig& cfg, std::optional<double> radius) {
  Dataset data = cfg.target.kind == TargetSpec::Kind::gaussian
                     ? sample_dataset(gaussian_target(cfg), cfg.dataset_size,
                                      derive_seed(*cfg.seed, {kDataset}))
                     : load_dataset(cfg.target.path);
  if (radius) data = scale_to_radius(data, *radius);
  return data;
}

std::string csv_comments(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& line : provenance_lines(cfg)) out += "# " + line + "\n";
  return out;
}

std::string points_csv(const ExperimentConfig& cfg, const PointSet& points) {
  std::string out = csv_comments(cfg);
  for (std::size_t k = 0; k < points.dim(); ++k) out += (k ? ",x" : "x") + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto row = points[i];
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += format_double(row[k]);
    }
    out += '\n';
  }
  return out;
}

std::string dataset_csv(const ExperimentConfig& cfg, const Dataset& data) {
  std::string header = "d=" + std::to_string(data.dim()) + ",N=" + std::to_string(data.size());
  if (data.seed()) header += ",seed=" + std::to_string(*data.seed());
  header += ",source=" + to_string(data.source());
  auto body = points_csv(cfg, data.points());
  const auto split = body.find("\nx0");
  return body.insert(split + 1, header + "\n");
}

std::string json_file(const ExperimentConfig& cfg, json report) {
  report["config"] = cfg.to_json();
  return report.dump(2) + "\n";
}

RunOutcome commit(const ExperimentConfig& cfg, const std::vector<OutputFile>& files, int exit_code,
                  std::string summary) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output, ec);
  if (ec) throw IoError(cfg.output.string() + ": cannot create output directory: " + ec.message());
  RunOutcome outcome{exit_code, {}, std::move(summary)};
  for (const auto& f : files) {
    const auto path = cfg.output / f.name;
    write_text_file(path, f.content);
    outcome.written.push_back(path);
  }
  return outcome;
}

std::string delta_tag(double delta) { return "delta" + format_double(delta); }

json nn_json(const NearestNeighborStats& nn) {
  return {{"median", nn.median},
          {"q10", quantile(nn.distances, 0.1)},
          {"q90", quantile(nn.distances, 0.9)}};
}

SamplerConfig sampler_config(const ExperimentConfig& cfg, double delta, std::uint64_t seed) {
  SamplerConfig sc;
  sc.grid = TimeGrid::uniform(cfg.horizon, cfg.step);
  sc.early_stop = delta;
  sc.seed = seed;
  return sc;
}

LogDensity mixture_density(const Dataset& data, double center_scale, double variance) {
  return {data.dim(), [&data, center_scale, variance](std::span<const double> x) {
            return scaled_mixture_log_density(data, center_scale, variance, x);
          }};
}

PointSampler kde_sampler(const KdeModel& model) {
  return [&model](Rng& rng, std::span<double> out) { kde_sample_into(model, rng, out); };
}

struct BoundRow {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double std_error = 0.0;
  bool pass = false;
};

BoundRow tv_row(std::string id, const EstimateReport& tv, double rhs) {
  return {std::move(id), tv.value, rhs, tv.std_error, tv.value <= rhs + 3.0 * tv.std_error};
}

}  // namespace

std::vector<std::string> provenance_lines(const ExperimentConfig& cfg) {
  std::vector<std::string> lines{"scorelab " + to_string(cfg.kind)};
  std::istringstream echo(cfg.echo());
  for (std::string line; std::getline(echo, line);) lines.push_back(line);
  return lines;
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case ExperimentKind::score_error: return run_score_error(cfg);
    case ExperimentKind::generate: return run_generate(cfg);
    case ExperimentKind::kde_compare: return run_kde_compare(cfg);
    case ExperimentKind::bounds_check: return run_bounds_check(cfg);
  }
  return {};
}

RunOutcome run_score_error(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto target = gaussian_target(cfg);
  ErrorCurve curve;
  for (std::size_t n : cfg.sizes) {
    ScoreErrorParams params;
    params.sample_count = n;
    params.early_stop = cfg.error_delta;
    params.horizon = cfg.error_horizon;
    params.grid_step = cfg.error_grid_step;
    params.mc_samples = cfg.mc_samples;
    params.repetitions = cfg.repetitions;
    params.seed = *cfg.seed;
    curve.entries.push_back({n, score_error_protocol(target, params)});
  }
  if (curve.entries.size() >= 3) {
    const auto fit = loglog_slope(curve);
    curve.fitted_slope = fit.slope;
    curve.fitted_intercept = fit.intercept;
  }

  std::string csv = csv_comments(cfg) + "N,error,std_error\n";
  json entries = json::array();
  for (const auto& e : curve.entries) {
    csv += std::to_string(e.sample_count) + "," + format_double(e.estimate.value) + "," +
           format_double(e.estimate.std_error) + "\n";
    entries.push_back({{"N", e.sample_count},
                       {"error", e.estimate.value},
                       {"std_error", e.estimate.std_error},
                       {"K", e.estimate.parameters["K"]},
                       {"per_repetition", e.estimate.parameters["per_repetition"]}});
  }
  json report{{"experiment", "score-error"},
              {"slope", curve.fitted_slope ? json(*curve.fitted_slope) : json(nullptr)},
              {"intercept", curve.fitted_intercept ? json(*curve.fitted_intercept) : json(nullptr)},
              {"entries", entries}};

  std::string summary = "score-error: " + std::to_string(curve.entries.size()) + " sizes";
  if (curve.fitted_slope) summary += ", log-log slope " + format_double(*curve.fitted_slope);
  return commit(cfg, {{"score_error.csv", csv}, {"score_error.json", json_file(cfg, report)}}, 0,
                summary);
}

RunOutcome run_generate(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto data = prepare_dataset(cfg, cfg.dataset_radius);
  const bool gaussian = cfg.target.kind == TargetSpec::Kind::gaussian;
  std::vector<OutputFile> files{{"training.csv", dataset_csv(cfg, data)}};
  json runs = json::array();
  std::string summary = "generate:";
  for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
    const double delta = cfg.deltas[di];
    // Both scores share starting points and noise for a given delta.
    const auto sc = sampler_config(cfg, delta, derive_seed(*cfg.seed, {kSampler, di}));
    for (std::size_t si = 0; si < cfg.scores.size(); ++si) {
      const auto& name = cfg.scores[si];
      const ScoreField score =
          name == "exact" ? exact_gaussian_score(gaussian_target(cfg)) : empirical_optimal_score(data);
      const auto batch = backward_sample(score, sc, cfg.samples);
      const auto nn = nn_distance_stats(batch.points, data);
      json run{{"score", name},
               {"delta", delta},
               {"descriptor", batch.descriptor},
               {"steps", batch.stop_index},
               {"stop_gap", batch.stop_gap},
               {"nearest_training_distance", nn_json(nn)}};
      if (name == "exact" && gaussian) {
        Rng oracle_rng = derive_stream(*cfg.seed, {kOracle, di});
        PointSet fresh = sample_dataset(gaussian_target(cfg), cfg.samples, oracle_rng.next_u64()).points();
        Rng test_rng = derive_stream(*cfg.seed, {kTest, di, si});
        const auto test = energy_distance_test(batch.points, fresh, cfg.permutations, test_rng);
        run["energy_test_vs_target"] = {{"statistic", test.statistic}, {"p_value", test.p_value}};
      }
      runs.push_back(run);
      const auto tag = name + "_" + delta_tag(delta);
      files.push_back({"init_" + tag + ".csv", points_csv(cfg, batch.initial)});
      files.push_back({"generated_" + tag + ".csv", points_csv(cfg, batch.points)});
      summary += "\n  " + tag + ": median nearest-training distance " + format_double(nn.median);
    }
  }
  json report{{"experiment", "generate"}, {"N", data.size()}, {"d", data.dim()}, {"runs", runs}};
  files.push_back({"generate.json", json_file(cfg, report)});
  return commit(cfg, files, 0, summary);
}

RunOutcome run_kde_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto data = prepare_dataset(cfg, cfg.dataset_radius);
  std::optional<double> scott;
  if (data.size() >= 2) {
    try {
      scott = scott_bandwidth(data, cfg.scott_multiplier);
    } catch (const DomainError&) {
    }
  }
  std::vector<OutputFile> files;
  json comparisons = json::array();
  bool any_reject = false;
  std::string summary = "kde-compare:";
  const auto score = empirical_optimal_score(data);
  for (std::size_t di = 0; di < cfg.deltas.size(); ++di) {
    const double delta = cfg.deltas[di];
    const auto c = coefficients(delta);
    const auto ddpm =
        backward_sample(score, sampler_config(cfg, delta, derive_seed(*cfg.seed, {kSampler, di})),
                        cfg.samples);
    const KdeModel model(data, c.sigma * cfg.bandwidth_factor, c.mu);
    Rng kde_rng = derive_stream(*cfg.seed, {kKde, di});
    const auto kde = kde_sample(model, cfg.samples, kde_rng);
    Rng test_rng = derive_stream(*cfg.seed, {kTest, di});
    const auto test = energy_distance_test(ddpm.points, kde.points, cfg.permutations, test_rng);
    const bool reject = test.rejects(cfg.alpha);
    any_reject = any_reject || reject;
    comparisons.push_back({{"delta", delta},
                           {"kde_bandwidth", model.bandwidth()},
                           {"kde_center_scale", model.center_scale()},
                           {"energy_statistic", test.statistic},
                           {"p_value", test.p_value},
                           {"critical_value", test.critical_value(cfg.alpha)},
                           {"rejects", reject},
                           {"ddpm_nearest_training_distance", nn_json(nn_distance_stats(ddpm.points, data))},
                           {"kde_nearest_training_distance", nn_json(nn_distance_stats(kde.points, data))}});
    files.push_back({"ddpm_" + delta_tag(delta) + ".csv", points_csv(cfg, ddpm.points)});
    files.push_back({"kde_" + delta_tag(delta) + ".csv", points_csv(cfg, kde.points)});
    summary += "\n  " + delta_tag(delta) + ": energy p-value " + format_double(test.p_value) +
               (reject ? " (rejects)" : " (does not reject)");
  }
  json report{{"experiment", "kde-compare"},
              {"alpha", cfg.alpha},
              {"scott_bandwidth", scott ? json(*scott) : json(nullptr)},
              {"comparisons", comparisons},
              {"pass", !any_reject}};
  files.push_back({"kde_compare.json", json_file(cfg, report)});
  return commit(cfg, files, any_reject ? 1 : 0, summary);
}

RunOutcome run_bounds_check(const ExperimentConfig& cfg) {
  cfg.validate();
  // Without an explicit radius the data are scaled into the ball of radius d.
  auto data = prepare_dataset(cfg, cfg.dataset_radius);
  if (!cfg.dataset_radius) data = scale_to_radius(data, static_cast<double>(data.dim()));
  const double d = static_cast<double>(data.dim());
  std::vector<BoundRow> rows;

  for (std::size_t i = 0; i < cfg.bound_deltas.size(); ++i) {
    const double delta = cfg.bound_deltas[i];
    const auto c = coefficients(delta);
    const auto backward = KdeModel::backward_law(data, delta);
    const KdeModel kde(data, c.sigma, 1.0);
    const auto f = mixture_density(data, c.mu, c.variance());
    const auto g = mixture_density(data, 1.0, c.variance());
    Rng rng = derive_stream(*cfg.seed, {kTv, 0, i});
    const auto tv = tv_mc(f, g, equal_mixture(kde_sampler(backward), kde_sampler(kde)), cfg.tv_samples, rng);
    rows.push_back(tv_row("tv_early_stop_kde_" + delta_tag(delta), tv, d * std::sqrt(delta) / 2.0));
  }

  for (std::size_t i = 0; i < cfg.bound_horizons.size(); ++i) {
    const double horizon = cfg.bound_horizons[i];
    const auto c = coefficients(horizon);
    const auto forward = KdeModel::backward_law(data, horizon);
    const auto f = mixture_density(data, c.mu, c.variance());
    const Point origin(data.dim(), 0.0);
    const LogDensity g{data.dim(), [&origin](std::span<const double> x) {
                         return isotropic_gaussian_log_density(x, origin, 1.0);
                       }};
    const PointSampler standard = [](Rng& rng, std::span<double> out) { rng.fill_normal(out); };
    Rng rng = derive_stream(*cfg.seed, {kTv, 1, i});
    const auto tv = tv_mc(f, g, equal_mixture(kde_sampler(forward), standard), cfg.tv_samples, rng);
    rows.push_back(tv_row("tv_forward_ou_T" + format_double(horizon), tv, d / 2.0 * std::exp(-horizon)));
  }

  {
    // DDPM output against direct draws from q_{T - delta}; the TV statement
    // itself has no closed-form density on the DDPM side, so a two-sample test stands in.
    const double delta = cfg.deltas.front();
    const auto ddpm = backward_sample(empirical_optimal_score(data),
                                      sampler_config(cfg, delta, derive_seed(*cfg.seed, {kSampler, 0})),
                                      cfg.samples);
    Rng oracle_rng = derive_stream(*cfg.seed, {kOracle, 0});
    const auto direct = kde_sample(KdeModel::backward_law(data, delta), cfg.samples, oracle_rng);
    Rng test_rng = derive_stream(*cfg.seed, {kTest, 0});
    const auto test = energy_distance_test(ddpm.points, direct.points, cfg.permutations, test_rng);
    rows.push_back({"energy_ddpm_vs_mixture_" + delta_tag(delta), test.statistic,
                    test.critical_value(cfg.alpha), 0.0, !test.rejects(cfg.alpha)});
  }

  {
    double worst_c5 = 0.0, worst_c10 = -std::numeric_limits<double>::infinity();
    double worst_c9 = 0.0;
    for (std::size_t r = 0; r < cfg.random_instances; ++r) {
      Rng rng = derive_stream(*cfg.seed, {kInstances, r});
      const double t = 0.01 + 4.99 * rng.uniform();
      Point x = forward_sample(data[rng.index(data.size())], t, rng);
      const double spread = 3.0 * rng.uniform();
      for (double& v : x) v += spread * rng.normal();

      const auto c5 = weighted_average_bounds_check(data, t, x);
      worst_c5 = std::max({worst_c5, c5.lhs / c5.bound_uniform, c5.lhs / c5.bound_radius});

      const double lambda = 1.0 / (2.0 * coefficients(t).mu);
      const double gap = mixture_log_density_lower_bound(data, t, x, lambda) -
                         empirical_mixture_log_density(data, t, x);
      worst_c10 = std::max(worst_c10, gap);

      const std::size_t n = 1 + rng.index(20);
      const std::size_t k = 1 + rng.index(5);
      PointSet vectors(k, n);
      const double scale = 0.1 + 2.0 * rng.uniform();
      for (std::size_t i = 0; i < n; ++i)
        for (double& v : vectors[i]) v = scale * rng.normal();
      const auto c9 = canonical_weighted_average(vectors);
      if (c9.rhs > 0.0) worst_c9 = std::max(worst_c9, c9.lhs / c9.rhs);
    }
    constexpr double kRoundoff = 1e-12;
    rows.push_back({"weighted_average_max_ratio", worst_c5, 1.0, 0.0, worst_c5 <= 1.0 + kRoundoff});
    rows.push_back({"canonical_average_max_ratio", worst_c9, 1.0, 0.0, worst_c9 <= 1.0 + kRoundoff});
    rows.push_back({"log_density_lower_bound_max_gap", worst_c10, 0.0, 0.0, worst_c10 <= kRoundoff});
  }

  std::string csv = csv_comments(cfg) + "bound_id,lhs,rhs,std_error,pass\n";
  bool all_pass = true;
  std::string summary = "bounds-check:";
  for (const auto& row : rows) {
    csv += row.id + "," + format_double(row.lhs) + "," + format_double(row.rhs) + "," +
           format_double(row.std_error) + "," + (row.pass ? "true" : "false") + "\n";
    all_pass = all_pass && row.pass;
    summary += "\n  " + row.id + ": " + (row.pass ? "pass" : "FAIL");
  }
  return commit(cfg, {{"bounds.csv", csv}}, all_pass ? 0 : 1, summary);
}

}  // namespace scorelab
