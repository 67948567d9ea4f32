#pragma once

// Monte-Carlo and quadrature estimators: score-matching losses, the score
// approximation-error protocol, Gaussian KL, total variation, the energy
// two-sample test, nearest-neighbour memorisation statistics and rate fits.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "scorelab/core.hpp"
#include "scorelab/rng.hpp"
#include "scorelab/scores.hpp"

namespace scorelab {

struct EstimateReport {
  double value = 0.0;
  double std_error = 0.0;  // normal-approximation standard error of value
  std::size_t replicates = 0;
  nlohmann::json parameters = nlohmann::json::object();
};

/// Sample mean and standard error (sample sd / sqrt(n)). Needs at least one value.
EstimateReport summarize(std::span<const double> values,
                         nlohmann::json parameters = nlohmann::json::object());

struct ErrorCurve {
  struct Entry {
    std::size_t sample_count = 0;
    EstimateReport estimate;
  };
  std::vector<Entry> entries;
  std::optional<double> fitted_slope;
  std::optional<double> fitted_intercept;

  /// Throws DomainError unless sample counts are strictly increasing.
  void validate() const;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log(value) against log(N). Needs >= 3 entries and positive values.
LineFit loglog_slope(const ErrorCurve& curve);
LineFit loglog_fit(std::span<const double> sample_counts, std::span<const double> values);

// -- score-matching losses at a fixed time t --------------------------------
//
// The Gaussian-target estimators all consume the stream identically (y ~ target,
// then x ~ p_t(x|y), d normals each), so two calls given copies of one Rng see
// the same points. That is the shared randomness used for paired comparisons.

/// E_{y ~ target, x ~ p_t(.|y)} ||s(t,x) - u(t,x|y)||^2.
EstimateReport csm_loss(const ScoreField& s, const IsotropicGaussianTarget& target, double t,
                        std::size_t mc_samples, Rng& rng);

/// (1/N) sum_i E_{x ~ p_t(.|y_i)} ||s(t,x) - u(t,x|y_i)||^2. Each replicate draws
/// i uniformly and x ~ p_t(.|y_i), then averages the integrand over the
/// posterior of i given x (softmax weights) instead of using the drawn i alone.
/// The expectation is unchanged; the posterior average makes s^N the exact
/// pointwise minimiser of every sample.
EstimateReport csm_loss(const ScoreField& s, const Dataset& dataset, double t,
                        std::size_t mc_samples, Rng& rng);

/// E_{x ~ p_t} ||s(t,x) - u(t,x)||^2 with u the exact score of the Gaussian target.
EstimateReport sm_loss(const ScoreField& s, const IsotropicGaussianTarget& target, double t,
                       std::size_t mc_samples, Rng& rng);

/// Paired estimates of L(s1) - L(s2) from one set of draws.
EstimateReport csm_loss_difference(const ScoreField& s1, const ScoreField& s2,
                                   const IsotropicGaussianTarget& target, double t,
                                   std::size_t mc_samples, Rng& rng);
EstimateReport sm_loss_difference(const ScoreField& s1, const ScoreField& s2,
                                  const IsotropicGaussianTarget& target, double t,
                                  std::size_t mc_samples, Rng& rng);

// -- score approximation error ----------------------------------------------

struct ScoreErrorParams {
  std::size_t sample_count = 100;  // N
  double early_stop = 0.02;
  double horizon = 5.0;
  double grid_step = 0.02;
  std::size_t mc_samples = 1000;  // M per time point
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

using ScoreFactory = std::function<ScoreField(const Dataset&)>;

/// t_k = early_stop + k * step for every t_k <= horizon. Throws DomainError
/// unless 0 < early_stop < horizon and step > 0.
std::vector<double> score_error_times(double early_stop, double horizon, double step);

/// (1/K)(1/M) sum_k sum_m ||s(t_k, x_m^k) - u(t_k, x_m^k)||^2 over given samples.
double mean_squared_score_error(const ScoreField& s, const ScoreField& u,
                                std::span<const double> times, std::span<const PointSet> samples);

/// Per repetition r: draw a fresh dataset of size N (seed derive_seed(seed, {N, r, 0})),
/// draw M points from the closed-form p_{t_k} at every grid time (stream
/// derive_stream(seed, {N, r, 1, k})) and average ||s(t,x) - u(t,x)||^2.
/// Reports mean and standard error over repetitions. `factory` builds s from the
/// dataset; it defaults to the empirical optimal score.
EstimateReport score_error_protocol(const IsotropicGaussianTarget& target,
                                    const ScoreErrorParams& params,
                                    const ScoreFactory& factory = {});

// -- Gaussian KL -------------------------------------------------------------

struct DiagonalCovariance {
  std::vector<double> variances;

  static DiagonalCovariance isotropic(std::size_t dim, double variance) {
    return {std::vector<double>(dim, variance)};
  }
};

/// Closed-form KL(N(mp, Sp) || N(mq, Sq)) for diagonal covariances.
double kl_gaussians(std::span<const double> mean_p, const DiagonalCovariance& cov_p,
                    std::span<const double> mean_q, const DiagonalCovariance& cov_q);

// -- total variation ---------------------------------------------------------

struct LogDensity {
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> eval;
};

using PointSampler = std::function<void(Rng&, std::span<double>)>;

/// Sampler for (a + b) / 2: a fair coin picks the component.
PointSampler equal_mixture(PointSampler a, PointSampler b);

/// TV(f, g) = E_{x ~ m} |f - g| / (2m) with m = (f + g)/2, evaluated per draw as
/// |tanh((log f - log g) / 2)| so no raw density is formed. `mixture` must draw from m.
EstimateReport tv_mc(const LogDensity& f, const LogDensity& g, const PointSampler& mixture,
                     std::size_t mc_samples, Rng& rng);

/// Trapezoid rule for (1/2) int |f - g| on [lo, hi]. Both densities must be one-dimensional.
double tv_quadrature_1d(const LogDensity& f, const LogDensity& g, double lo, double hi,
                        std::size_t grid_points = 100001);

// -- energy-distance two-sample test -----------------------------------------

struct EnergyTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> null_statistics;  // one per permutation, in permutation order

  bool rejects(double alpha) const { return p_value < alpha; }
  /// Empirical (1 - alpha) quantile of the permutation distribution.
  double critical_value(double alpha) const;
};

/// (nm/(n+m)) (2 E|A-B| - E|A-A'| - E|B-B'|) with V-statistic averages.
double energy_statistic(const PointSet& a, const PointSet& b);

/// Permutation test of equal distributions; p = (1 + #{null >= observed}) / (1 + P).
/// One draw from `rng` seeds the permutations, each of which gets its own
/// derived stream. Throws DomainError on dimension mismatch, empty batches or
/// fewer than 200 permutations.
EnergyTestResult energy_distance_test(const PointSet& a, const PointSet& b,
                                      std::size_t permutations, Rng& rng);

// -- memorisation ------------------------------------------------------------

struct NearestNeighborStats {
  std::vector<double> distances;     // per generated point
  std::vector<std::size_t> indices;  // nearest training index, ties to the lowest
  double median = 0.0;

  double fraction_below(double radius) const;
};

NearestNeighborStats nn_distance_stats(const PointSet& generated, const Dataset& dataset);

double median(std::vector<double> values);
/// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace scorelab
