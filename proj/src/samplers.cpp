#include "scorelab/samplers.hpp"

#include <algorithm>
#include <string>

#include "scorelab/ou.hpp"
#include "scorelab/parallel.hpp"

namespace scorelab {

TimeGrid TimeGrid::uniform(double horizon, double step) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw DomainError("TimeGrid: horizon must be positive");
  if (!(step > 0.0)) throw DomainError("TimeGrid: step must be positive");
  // Guard against T / h landing a hair above an integer.
  const double ratio = horizon / step;
  auto k = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio));
  k = std::max<std::size_t>(k, 1);
  std::vector<double> points(k + 1);
  for (std::size_t n = 0; n <= k; ++n)
    points[n] = horizon * static_cast<double>(n) / static_cast<double>(k);
  points[k] = horizon;
  return TimeGrid(std::move(points));
}

TimeGrid TimeGrid::from_points(std::vector<double> points) {
  if (points.size() < 2) throw DomainError("TimeGrid: need at least two points");
  if (points.front() != 0.0) throw DomainError("TimeGrid: grid must start at 0");
  for (std::size_t n = 1; n < points.size(); ++n)
    if (!(points[n] > points[n - 1]) || !std::isfinite(points[n]))
      throw DomainError("TimeGrid: grid must be strictly increasing");
  return TimeGrid(std::move(points));
}

void SamplerConfig::validate() const {
  if (!(early_stop >= 0.0) || !(early_stop < grid.horizon()))
    throw DomainError("SamplerConfig: early stop must lie in [0, T)");
}

std::size_t SamplerConfig::stop_index() const {
  validate();
  const double target = grid.horizon() - early_stop;
  const double slack = 1e-12 * grid.horizon();
  const auto& pts = grid.points();
  const auto it = std::upper_bound(pts.begin(), pts.end(), target + slack);
  return static_cast<std::size_t>(it - pts.begin()) - 1;
}

double SamplerConfig::stop_gap() const {
  return std::max(0.0, grid.horizon() - early_stop - grid[stop_index()]);
}

namespace {

void integrate_trajectory(const ScoreField& score, const SamplerConfig& config,
                          std::size_t stop, Rng& rng, std::span<double> x) {
  const std::size_t d = x.size();
  const double horizon = config.grid.horizon();
  Point drift(d);
  for (std::size_t n = 1; n <= stop; ++n) {
    const double t_prev = config.grid[n - 1];
    const double h = config.grid[n] - t_prev;
    try {
      score.eval_into(horizon - t_prev, x, drift);
    } catch (const SingularityError& e) {
      throw SingularityError("backward sampler step " + std::to_string(n) + ": " + e.what());
    }
    const double growth = 1.0 + h;
    const double noise_scale = std::sqrt(2.0 * h);
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = growth * x[k] + 2.0 * h * drift[k];
      if (config.noise_enabled) x[k] += noise_scale * rng.normal();
    }
  }
}

SampleBatch make_batch(const ScoreField& score, const SamplerConfig& config) {
  SampleBatch batch;
  batch.config = config;
  batch.descriptor = score.descriptor();
  batch.stop_index = config.stop_index();
  batch.stop_gap = config.stop_gap();
  return batch;
}

}  // namespace

SampleBatch backward_sample(const ScoreField& score, const SamplerConfig& config,
                            std::size_t count) {
  config.validate();
  if (count == 0) throw DomainError("backward_sample: count must be positive");
  auto batch = make_batch(score, config);
  const std::size_t d = score.dim();
  batch.initial = PointSet(d, count);
  batch.points = PointSet(d, count);
  parallel_for(count, [&](std::size_t j) {
    Rng rng = derive_stream(config.seed, {j});
    auto start = batch.initial[j];
    rng.fill_normal(start);
    auto x = batch.points[j];
    std::copy(start.begin(), start.end(), x.begin());
    integrate_trajectory(score, config, batch.stop_index, rng, x);
  });
  return batch;
}

SampleBatch backward_integrate(const ScoreField& score, const SamplerConfig& config,
                               const PointSet& initial) {
  config.validate();
  if (initial.empty()) throw DomainError("backward_integrate: no starting points");
  if (initial.dim() != score.dim()) throw DomainError("backward_integrate: dimension mismatch");
  auto batch = make_batch(score, config);
  batch.initial = initial;
  batch.points = initial;
  parallel_for(initial.size(), [&](std::size_t j) {
    Rng rng = derive_stream(config.seed, {j});
    integrate_trajectory(score, config, batch.stop_index, rng, batch.points[j]);
  });
  return batch;
}

SampleBatch forward_terminal_sample(const Dataset& dataset, double horizon, std::size_t count,
                                    Rng& rng) {
  if (!(horizon > 0.0)) throw DomainError("forward_terminal_sample: horizon must be positive");
  SampleBatch batch;
  batch.descriptor = "forward-terminal(dataset)";
  batch.points = PointSet(dataset.dim(), count);
  for (std::size_t j = 0; j < count; ++j)
    forward_sample_into(dataset[rng.index(dataset.size())], horizon, rng, batch.points[j]);
  return batch;
}

SampleBatch forward_terminal_sample(const IsotropicGaussianTarget& target, double horizon,
                                    std::size_t count, Rng& rng) {
  target.validate();
  if (!(horizon > 0.0)) throw DomainError("forward_terminal_sample: horizon must be positive");
  SampleBatch batch;
  batch.descriptor = "forward-terminal(gaussian)";
  batch.points = PointSet(target.dim(), count);
  const double sd = std::sqrt(target.variance);
  Point y(target.dim());
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = target.mean[k] + sd * rng.normal();
    forward_sample_into(y, horizon, rng, batch.points[j]);
  }
  return batch;
}

}  // namespace scorelab
