#pragma once

// Euler-Maruyama integration of the backward (generation) SDE
//   dX = (X + 2 s(T - t, X)) dt + sqrt(2) dB,   X_0 ~ N(0, I),
// and direct sampling of the forward terminal law p_T.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scorelab/core.hpp"
#include "scorelab/rng.hpp"
#include "scorelab/scores.hpp"

namespace scorelab {

/// Strictly increasing sampler-time grid 0 = t_0 < ... < t_K = T.
class TimeGrid {
 public:
  /// K = ceil(T / h) equal steps of size T / K.
  static TimeGrid uniform(double horizon, double step);
  static TimeGrid from_points(std::vector<double> points);

  double horizon() const { return points_.back(); }
  /// Number of steps K (one less than the number of grid points).
  std::size_t steps() const { return points_.size() - 1; }
  double operator[](std::size_t n) const { return points_[n]; }
  const std::vector<double>& points() const { return points_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  explicit TimeGrid(std::vector<double> points) : points_(std::move(points)) {}
  std::vector<double> points_;
};

struct SamplerConfig {
  TimeGrid grid = TimeGrid::uniform(5.0, 0.0005);
  double early_stop = 0.0;
  std::uint64_t seed = 0;
  bool noise_enabled = true;  // false only in deterministic diagnostics

  /// Throws DomainError unless 0 <= early_stop < T.
  void validate() const;
  /// Largest n with t_n <= T - early_stop (relative slack 1e-12 T for grid rounding).
  std::size_t stop_index() const;
  /// (T - early_stop) - t_stop, the part of the horizon left unintegrated; 0 <= gap.
  double stop_gap() const;
};

struct SampleBatch {
  PointSet points;
  PointSet initial;  // starting positions, when the producer has them
  std::optional<SamplerConfig> config;
  std::string descriptor;
  std::size_t stop_index = 0;
  double stop_gap = 0.0;
};

/// Runs `count` independent trajectories from standard-normal starts. The
/// trajectory with index j draws its start and all its increments from
/// derive_stream(config.seed, {j}), so results do not depend on count or on
/// the worker count. A singular score evaluation is rethrown as
/// SingularityError naming the step.
SampleBatch backward_sample(const ScoreField& score, const SamplerConfig& config,
                            std::size_t count);

/// Same update rule from caller-supplied starting points; trajectory j uses the
/// stream derive_stream(config.seed, {j}) for its increments only.
SampleBatch backward_integrate(const ScoreField& score, const SamplerConfig& config,
                               const PointSet& initial);

/// X_T = mu(T) y + sigma(T) Z with y drawn uniformly from the dataset.
SampleBatch forward_terminal_sample(const Dataset& dataset, double horizon, std::size_t count,
                                    Rng& rng);
/// X_T = mu(T) y + sigma(T) Z with y ~ target.
SampleBatch forward_terminal_sample(const IsotropicGaussianTarget& target, double horizon,
                                    std::size_t count, Rng& rng);

}  // namespace scorelab
